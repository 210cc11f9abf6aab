#pragma once

#include "napkin/grid.hpp"
#include "napkin/nuisance.hpp"
#include "napkin/weight.hpp"

#include <string>
#include <vector>

namespace napkin {

// kappa2 below this value is treated as degenerate.
inline constexpr double kappa2_floor = 1e-6;

// n^-1 sum_i mu(x0, z, W_i) pi(x0 | z, W_i)
double kappa1_plugin(const NuisanceSet& Q, double z, int x0);
// n^-1 sum_i pi(x0 | z, W_i); appends a warning when below kappa2_floor.
double kappa2_plugin(const NuisanceSet& Q, double z, int x0, std::vector<std::string>* warnings = nullptr);
double psi_plugin_at(const NuisanceSet& Q, double z, int x0);
// sum over quadrature nodes of weight * psi_plugin_at(node)
double psi_plugin_weighted(const NuisanceSet& Q, const WeightSpec& spec, int x0);

// kappa1 / kappa2 at every grid row; throws naming the z value when kappa2 is degenerate.
std::vector<double> psi_by_row(const NuisanceGrid& grid);
double psi_on_target(const Target& target);

}  // namespace napkin
