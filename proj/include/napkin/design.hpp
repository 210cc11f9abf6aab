#pragma once

#include "napkin/dataset.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace napkin {

// Values at which a nuisance is evaluated: treatment x, trapdoor z, and the
// W and C rows (C may be null when absent).
struct Covariates {
  double x = 0.0;
  double z = 0.0;
  const double* w = nullptr;
  const double* c = nullptr;
};

enum class VarKind { x, z, w, c };

struct Factor {
  VarKind kind = VarKind::x;
  std::size_t index = 0;
  bool complement = false;  // use (1 - v)
};

// Product of factors, e.g. "x:z" or "(1-w):(1-x)".
struct Term {
  std::vector<Factor> factors;
  std::string label;
};

// Design row = [1, term_1, ..., term_p]; the intercept is always present.
class Design {
 public:
  Design() = default;
  explicit Design(std::vector<Term> terms) : terms_(std::move(terms)) {}

  std::size_t width() const { return terms_.size() + 1; }
  const std::vector<Term>& terms() const { return terms_; }
  bool uses(VarKind kind) const;

  void fill(const Covariates& cov, double* out) const;
  Eigen::MatrixXd matrix(const Dataset& data, const std::vector<std::size_t>& rows, bool use_x,
                         bool use_z) const;

 private:
  std::vector<Term> terms_;
};

// Parses "a:b:(1-c)" against column names. Accepted variable names: x, z, the
// data's own X/Z names, W and C column names, and positional aliases w0, w1, ..., c0, ...
Term parse_term(const std::string& text, const ColumnNames& names);

Design main_effects_design(bool include_x, bool include_z, const std::vector<std::size_t>& w_indices,
                           std::size_t c_count, const ColumnNames& names);

Covariates row_covariates(const Dataset& data, std::size_t row);

}  // namespace napkin
