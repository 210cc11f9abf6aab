#pragma once

#include <stdexcept>
#include <string>

namespace napkin {

enum class ErrorKind {
  validation,   // malformed input, schema violations, role problems
  parse,        // unreadable CSV cells
  overlap,      // weight spec outside the support of Z
  degenerate,   // numerical degeneracy: singular designs, vanishing kappa2
  internal
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail_validation(const std::string& message);
[[noreturn]] void fail_parse(const std::string& message);
[[noreturn]] void fail_overlap(const std::string& message);
[[noreturn]] void fail_degenerate(const std::string& message);

// Exit code used by the command line front end for an error kind.
int exit_code_for(ErrorKind kind) noexcept;

const char* to_string(ErrorKind kind) noexcept;

}  // namespace napkin
