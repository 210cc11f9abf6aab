#include "napkin/dataset.hpp"

#include "napkin/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace napkin {

namespace {

std::vector<double> distinct_sorted(const std::vector<double>& v) {
  std::vector<double> out(v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string current;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      current.push_back(ch);
    } else if (ch == ',' && !quoted) {
      cells.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  cells.push_back(trim(current));
  return cells;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  if (cell.empty()) {
    fail_parse("missing value in column '" + column + "' at data row " + std::to_string(row));
  }
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (*begin == '+') ++begin;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    fail_parse("non-numeric cell '" + cell + "' in column '" + column + "' at data row " +
               std::to_string(row));
  }
  return value;
}

}  // namespace

bool infer_z_discrete(const std::vector<double>& z, int level_cap) {
  std::set<double> seen;
  for (double v : z) {
    if (v != std::floor(v)) return false;
    seen.insert(v);
    if (static_cast<int>(seen.size()) > level_cap) return false;
  }
  return true;
}

Dataset::Dataset(RowMatrix w, std::vector<double> z, std::vector<int> x, std::vector<double> y,
                 RowMatrix c, ZKindRequest z_kind, int level_cap, ColumnNames names)
    : w_(std::move(w)),
      c_(std::move(c)),
      z_(std::move(z)),
      x_(std::move(x)),
      y_(std::move(y)),
      names_(std::move(names)) {
  const std::size_t n = y_.size();
  if (n == 0) fail_validation("dataset must contain at least one observation");
  if (z_.size() != n || x_.size() != n || static_cast<std::size_t>(w_.rows()) != n) {
    fail_validation("columns W, Z, X, Y must all have length n");
  }
  if (w_.cols() < 1) fail_validation("at least one W covariate is required");
  if (c_.cols() > 0 && static_cast<std::size_t>(c_.rows()) != n) {
    fail_validation("confounder matrix C must have n rows");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (x_[i] != 0 && x_[i] != 1) {
      fail_validation("treatment X must be 0 or 1; row " + std::to_string(i) + " has " +
                      std::to_string(x_[i]));
    }
    if (!std::isfinite(z_[i]) || !std::isfinite(y_[i])) {
      fail_validation("non-finite Z or Y at row " + std::to_string(i));
    }
  }
  if (!w_.allFinite() || (c_.size() > 0 && !c_.allFinite())) {
    fail_validation("non-finite covariate value");
  }
  if (level_cap < 1) fail_validation("level cap must be positive");

  switch (z_kind) {
    case ZKindRequest::automatic:
      z_discrete_ = infer_z_discrete(z_, level_cap);
      break;
    case ZKindRequest::discrete:
      z_discrete_ = true;
      break;
    case ZKindRequest::continuous:
      z_discrete_ = false;
      break;
  }
  if (z_discrete_) z_levels_ = distinct_sorted(z_);
  auto [lo, hi] = std::minmax_element(z_.begin(), z_.end());
  z_min_ = *lo;
  z_max_ = *hi;
  y_binary_ = std::all_of(y_.begin(), y_.end(), [](double v) { return v == 0.0 || v == 1.0; });

  if (names_.w.size() != dw()) {
    names_.w.clear();
    for (std::size_t j = 0; j < dw(); ++j) names_.w.push_back(dw() == 1 ? "w" : "w" + std::to_string(j));
  }
  if (names_.c.size() != dc()) {
    names_.c.clear();
    for (std::size_t j = 0; j < dc(); ++j) names_.c.push_back(dc() == 1 ? "c" : "c" + std::to_string(j));
  }
}

bool Dataset::has_z_level(double value) const {
  return std::binary_search(z_levels_.begin(), z_levels_.end(), value);
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  RowMatrix w(rows.size(), w_.cols());
  RowMatrix c(c_.cols() > 0 ? rows.size() : 0, c_.cols());
  std::vector<double> z, y;
  std::vector<int> x;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(rows[k]);
    w.row(static_cast<Eigen::Index>(k)) = w_.row(i);
    if (c_.cols() > 0) c.row(static_cast<Eigen::Index>(k)) = c_.row(i);
    z.push_back(z_[rows[k]]);
    x.push_back(x_[rows[k]]);
    y.push_back(y_[rows[k]]);
  }
  return Dataset(std::move(w), std::move(z), std::move(x), std::move(y), std::move(c),
                 z_discrete_ ? ZKindRequest::discrete : ZKindRequest::continuous, 10, names_);
}

Dataset parse_csv(const std::string& text, const RoleMap& roles) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail_validation("CSV input is empty; a header row is required");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
  const auto header = split_line(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) index[header[j]] = j;

  auto locate = [&](const std::string& name, const char* role) {
    auto it = index.find(name);
    if (name.empty() || it == index.end()) {
      throw Error(ErrorKind::validation,
                  std::string("role error: column '") + name + "' for role " + role + " not found");
    }
    return it->second;
  };
  if (roles.w.empty()) throw Error(ErrorKind::validation, "role error: at least one W column is required");
  std::vector<std::size_t> w_cols, c_cols;
  for (const auto& name : roles.w) w_cols.push_back(locate(name, "W"));
  for (const auto& name : roles.c) c_cols.push_back(locate(name, "C"));
  const std::size_t z_col = locate(roles.z, "Z");
  const std::size_t x_col = locate(roles.x, "X");
  const std::size_t y_col = locate(roles.y, "Y");

  std::vector<std::vector<double>> wv, cv;
  std::vector<double> z, y;
  std::vector<int> x;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      fail_parse("data row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                 " cells, header has " + std::to_string(header.size()));
    }
    std::vector<double> wr, cr;
    for (std::size_t k = 0; k < w_cols.size(); ++k) {
      wr.push_back(parse_number(cells[w_cols[k]], row, roles.w[k]));
    }
    for (std::size_t k = 0; k < c_cols.size(); ++k) {
      cr.push_back(parse_number(cells[c_cols[k]], row, roles.c[k]));
    }
    z.push_back(parse_number(cells[z_col], row, roles.z));
    const double xv = parse_number(cells[x_col], row, roles.x);
    if (xv != 0.0 && xv != 1.0) {
      fail_validation("treatment column '" + roles.x + "' must be 0/1; data row " +
                      std::to_string(row) + " has " + cells[x_col]);
    }
    x.push_back(static_cast<int>(xv));
    y.push_back(parse_number(cells[y_col], row, roles.y));
    wv.push_back(std::move(wr));
    cv.push_back(std::move(cr));
    ++row;
  }
  if (row == 0) fail_validation("CSV input has no data rows");

  RowMatrix w(row, w_cols.size());
  RowMatrix c(c_cols.empty() ? 0 : row, c_cols.size());
  for (std::size_t i = 0; i < row; ++i) {
    for (std::size_t k = 0; k < w_cols.size(); ++k) w(i, k) = wv[i][k];
    for (std::size_t k = 0; k < c_cols.size(); ++k) c(i, k) = cv[i][k];
  }
  ColumnNames names{roles.w, roles.c, roles.z, roles.x, roles.y};
  return Dataset(std::move(w), std::move(z), std::move(x), std::move(y), std::move(c),
                 roles.z_kind, roles.level_cap, std::move(names));
}

Dataset load_csv(const std::string& path, const RoleMap& roles) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_validation("cannot open data file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), roles);
}

std::string format_csv(const Dataset& data) {
  const auto& names = data.names();
  std::string out;
  auto append_header = [&](const std::string& name) {
    if (!out.empty()) out.push_back(',');
    out += name;
  };
  for (const auto& name : names.w) append_header(name);
  for (const auto& name : names.c) append_header(name);
  append_header(names.z);
  append_header(names.x);
  append_header(names.y);
  out.push_back('\n');
  char buf[64];
  auto append = [&](double v, bool first) {
    if (!first) out.push_back(',');
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  };
  for (std::size_t i = 0; i < data.n(); ++i) {
    bool first = true;
    for (std::size_t j = 0; j < data.dw(); ++j) {
      append(data.w()(i, j), first);
      first = false;
    }
    for (std::size_t j = 0; j < data.dc(); ++j) append(data.c()(i, j), false);
    append(data.z()[i], false);
    append(data.x()[i], false);
    append(data.y()[i], false);
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_validation("cannot write '" + path + "'");
  out << format_csv(data);
}

}  // namespace napkin
