#pragma once

#include "napkin/dataset.hpp"
#include "napkin/nuisance.hpp"
#include "napkin/weight.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <vector>

namespace napkin {

inline constexpr std::size_t no_row = std::numeric_limits<std::size_t>::max();

// Nuisance values at treatment level x0 tabulated on a set of trapdoor values
// (rows) for every covariate group of the nuisance set (columns).
struct NuisanceGrid {
  int x0 = 1;
  std::vector<double> z;
  Eigen::MatrixXd mu;  // mu(x0, z, w_g)
  Eigen::MatrixXd pi;  // pi(x0 | z, w_g), clipped
  Eigen::MatrixXd fz;  // f_Z(z | w_g), clipped
  Eigen::RowVectorXd group_weight;
  std::vector<std::size_t> obs_group;
  std::size_t clipped_count = 0;

  std::size_t row_of(double value) const;
  double kappa1(std::size_t row) const;
  double kappa2(std::size_t row) const;
};

// Tabulates at the sorted distinct values of z_values.
NuisanceGrid tabulate(const NuisanceSet& Q, int x0, std::vector<double> z_values);

// How the target aggregates over Z, expressed on grid rows.
struct TargetWeights {
  std::vector<std::size_t> node_row;
  std::vector<double> node_weight;
  std::vector<double> obs_weight;    // p~(Z_i)
  std::vector<std::size_t> obs_row;  // grid row of Z_i, no_row when p~(Z_i) = 0
  std::vector<double> row_weight;    // p~ at each grid row
};

struct Target {
  NuisanceGrid grid;
  TargetWeights weights;
};

Target make_target(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0);

void check_treatment_level(int x0);

}  // namespace napkin
