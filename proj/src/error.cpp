#include "napkin/error.hpp"

namespace napkin {

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

void fail_validation(const std::string& message) { throw Error(ErrorKind::validation, message); }
void fail_parse(const std::string& message) { throw Error(ErrorKind::parse, message); }
void fail_overlap(const std::string& message) { throw Error(ErrorKind::overlap, message); }
void fail_degenerate(const std::string& message) { throw Error(ErrorKind::degenerate, message); }

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::parse:
    case ErrorKind::overlap:
      return 2;
    case ErrorKind::degenerate:
      return 3;
    case ErrorKind::internal:
      return 1;
  }
  return 1;
}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation: return "validation error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::overlap: return "overlap error";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::internal: return "internal error";
  }
  return "error";
}

}  // namespace napkin
