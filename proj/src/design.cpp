#include "napkin/design.hpp"

#include "napkin/error.hpp"

#include <algorithm>

namespace napkin {

namespace {

double factor_value(const Factor& f, const Covariates& cov) {
  double v = 0.0;
  switch (f.kind) {
    case VarKind::x: v = cov.x; break;
    case VarKind::z: v = cov.z; break;
    case VarKind::w: v = cov.w[f.index]; break;
    case VarKind::c: v = cov.c[f.index]; break;
  }
  return f.complement ? 1.0 - v : v;
}

std::string strip_spaces(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch != ' ' && ch != '\t') out.push_back(ch);
  }
  return out;
}

bool positional(const std::string& name, char prefix, std::size_t count, std::size_t& index) {
  if (name.size() < 2 || name[0] != prefix) return false;
  if (!std::all_of(name.begin() + 1, name.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
    return false;
  }
  index = std::stoul(name.substr(1));
  return index < count;
}

Factor parse_factor(std::string text, const ColumnNames& names) {
  Factor f;
  if (text.size() > 4 && text.rfind("(1-", 0) == 0 && text.back() == ')') {
    f.complement = true;
    text = text.substr(3, text.size() - 4);
  }
  for (std::size_t j = 0; j < names.w.size(); ++j) {
    if (text == names.w[j]) {
      f.kind = VarKind::w;
      f.index = j;
      return f;
    }
  }
  for (std::size_t j = 0; j < names.c.size(); ++j) {
    if (text == names.c[j]) {
      f.kind = VarKind::c;
      f.index = j;
      return f;
    }
  }
  if (text == "x" || text == names.x) {
    f.kind = VarKind::x;
    return f;
  }
  if (text == "z" || text == names.z) {
    f.kind = VarKind::z;
    return f;
  }
  std::size_t index = 0;
  if (positional(text, 'w', names.w.size(), index)) {
    f.kind = VarKind::w;
    f.index = index;
    return f;
  }
  if (positional(text, 'c', names.c.size(), index)) {
    f.kind = VarKind::c;
    f.index = index;
    return f;
  }
  fail_validation("unknown variable '" + text + "' in model term");
}

}  // namespace

bool Design::uses(VarKind kind) const {
  for (const auto& term : terms_) {
    for (const auto& f : term.factors) {
      if (f.kind == kind) return true;
    }
  }
  return false;
}

void Design::fill(const Covariates& cov, double* out) const {
  out[0] = 1.0;
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    double v = 1.0;
    for (const auto& f : terms_[t].factors) v *= factor_value(f, cov);
    out[t + 1] = v;
  }
}

Eigen::MatrixXd Design::matrix(const Dataset& data, const std::vector<std::size_t>& rows, bool use_x,
                               bool use_z) const {
  Eigen::MatrixXd m(rows.size(), width());
  std::vector<double> buffer(width());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    Covariates cov = row_covariates(data, rows[k]);
    if (!use_x) cov.x = 0.0;
    if (!use_z) cov.z = 0.0;
    fill(cov, buffer.data());
    for (std::size_t j = 0; j < buffer.size(); ++j) m(k, j) = buffer[j];
  }
  return m;
}

Term parse_term(const std::string& text, const ColumnNames& names) {
  const std::string clean = strip_spaces(text);
  if (clean.empty()) fail_validation("empty model term");
  Term term;
  term.label = clean;
  std::size_t start = 0;
  while (start <= clean.size()) {
    const std::size_t colon = clean.find(':', start);
    const std::string piece =
        clean.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
    if (piece.empty()) fail_validation("malformed model term '" + text + "'");
    term.factors.push_back(parse_factor(piece, names));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  return term;
}

Design main_effects_design(bool include_x, bool include_z, const std::vector<std::size_t>& w_indices,
                           std::size_t c_count, const ColumnNames& names) {
  std::vector<Term> terms;
  if (include_x) terms.push_back(Term{{Factor{VarKind::x, 0, false}}, "x"});
  if (include_z) terms.push_back(Term{{Factor{VarKind::z, 0, false}}, "z"});
  for (std::size_t j : w_indices) {
    if (j >= names.w.size()) fail_validation("covariate index " + std::to_string(j) + " outside W");
    terms.push_back(Term{{Factor{VarKind::w, j, false}}, names.w[j]});
  }
  for (std::size_t j = 0; j < c_count; ++j) {
    terms.push_back(Term{{Factor{VarKind::c, j, false}}, names.c[j]});
  }
  return Design(std::move(terms));
}

Covariates row_covariates(const Dataset& data, std::size_t row) {
  Covariates cov;
  cov.x = data.x()[row];
  cov.z = data.z()[row];
  cov.w = data.w().row(static_cast<Eigen::Index>(row)).data();
  cov.c = data.has_confounders() ? data.c().row(static_cast<Eigen::Index>(row)).data() : nullptr;
  return cov;
}

}  // namespace napkin
