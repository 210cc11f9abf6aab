#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace napkin {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ZKindRequest { automatic, discrete, continuous };

struct ColumnNames {
  std::vector<std::string> w;
  std::vector<std::string> c;
  std::string z = "z";
  std::string x = "x";
  std::string y = "y";
};

// Column-name to role assignment used by load_csv.
struct RoleMap {
  std::vector<std::string> w;
  std::string z;
  std::string x;
  std::string y;
  std::vector<std::string> c;
  ZKindRequest z_kind = ZKindRequest::automatic;
  int level_cap = 10;
};

// Observations O = (Y, X, Z, W) with optional measured confounders C.
// Immutable after construction.
class Dataset {
 public:
  Dataset(RowMatrix w, std::vector<double> z, std::vector<int> x, std::vector<double> y,
          RowMatrix c = RowMatrix(), ZKindRequest z_kind = ZKindRequest::automatic,
          int level_cap = 10, ColumnNames names = {});

  std::size_t n() const { return y_.size(); }
  std::size_t dw() const { return static_cast<std::size_t>(w_.cols()); }
  std::size_t dc() const { return static_cast<std::size_t>(c_.cols()); }
  bool has_confounders() const { return c_.cols() > 0; }

  const RowMatrix& w() const { return w_; }
  const RowMatrix& c() const { return c_; }
  const std::vector<double>& z() const { return z_; }
  const std::vector<int>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }

  bool z_discrete() const { return z_discrete_; }
  // Sorted distinct levels when Z is discrete, empty otherwise.
  const std::vector<double>& z_levels() const { return z_levels_; }
  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }
  bool y_binary() const { return y_binary_; }
  bool has_z_level(double value) const;

  const ColumnNames& names() const { return names_; }

  // Rows in the given order; z_kind is carried over from this dataset.
  Dataset subset(const std::vector<std::size_t>& rows) const;

 private:
  RowMatrix w_;
  RowMatrix c_;
  std::vector<double> z_;
  std::vector<int> x_;
  std::vector<double> y_;
  bool z_discrete_ = false;
  std::vector<double> z_levels_;
  double z_min_ = 0.0;
  double z_max_ = 0.0;
  bool y_binary_ = false;
  ColumnNames names_;
};

// Discrete when there are at most level_cap distinct values, all integer valued.
bool infer_z_discrete(const std::vector<double>& z, int level_cap);

Dataset load_csv(const std::string& path, const RoleMap& roles);
Dataset parse_csv(const std::string& text, const RoleMap& roles);

// Writes the role columns (w..., c..., z, x, y) with 17 significant digits.
void write_csv(const Dataset& data, const std::string& path);
std::string format_csv(const Dataset& data);

}  // namespace napkin
