#include "napkin/grid.hpp"

#include "napkin/error.hpp"

#include <algorithm>

namespace napkin {

void check_treatment_level(int x0) {
  if (x0 != 0 && x0 != 1) fail_validation("treatment level x0 must be 0 or 1");
}

std::size_t NuisanceGrid::row_of(double value) const {
  auto it = std::lower_bound(z.begin(), z.end(), value);
  if (it == z.end() || *it != value) return no_row;
  return static_cast<std::size_t>(it - z.begin());
}

double NuisanceGrid::kappa1(std::size_t row) const {
  const auto r = static_cast<Eigen::Index>(row);
  return (mu.row(r).array() * pi.row(r).array() * group_weight.array()).sum();
}

double NuisanceGrid::kappa2(std::size_t row) const {
  return (pi.row(static_cast<Eigen::Index>(row)).array() * group_weight.array()).sum();
}

NuisanceGrid tabulate(const NuisanceSet& Q, int x0, std::vector<double> z_values) {
  check_treatment_level(x0);
  std::sort(z_values.begin(), z_values.end());
  z_values.erase(std::unique(z_values.begin(), z_values.end()), z_values.end());
  NuisanceGrid grid;
  grid.x0 = x0;
  grid.z = std::move(z_values);
  const auto rows = static_cast<Eigen::Index>(grid.z.size());
  const auto groups = static_cast<Eigen::Index>(Q.group_count());
  grid.mu.resize(rows, groups);
  grid.pi.resize(rows, groups);
  grid.fz.resize(rows, groups);
  grid.group_weight.resize(groups);
  const double eps = Q.clip_epsilon();
  for (Eigen::Index g = 0; g < groups; ++g) {
    const std::size_t rep = Q.group_representative(static_cast<std::size_t>(g));
    grid.group_weight(g) = Q.group_weight(static_cast<std::size_t>(g));
    for (Eigen::Index k = 0; k < rows; ++k) {
      const double z = grid.z[static_cast<std::size_t>(k)];
      grid.mu(k, g) = Q.mu(x0, z, rep);
      const double p1 = Q.pi_raw(z, rep);
      if (p1 < eps || p1 > 1.0 - eps) ++grid.clipped_count;
      grid.pi(k, g) = Q.pi(x0, z, rep);
      const double f = Q.fz_raw(z, rep);
      if (f < eps || (Q.z_discrete() && f > 1.0 - eps)) ++grid.clipped_count;
      grid.fz(k, g) = Q.fz(z, rep);
    }
  }
  grid.obs_group.resize(Q.n());
  for (std::size_t i = 0; i < Q.n(); ++i) grid.obs_group[i] = Q.group_of(i);
  return grid;
}

Target make_target(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0) {
  if (Q.n() != data.n()) fail_validation("nuisance set and dataset sizes differ");
  const QuadratureRule rule = build_quadrature(spec);
  std::vector<double> obs_weight(data.n());
  std::vector<double> values = rule.nodes;
  for (std::size_t i = 0; i < data.n(); ++i) {
    obs_weight[i] = weight_at(spec, data.z()[i]);
    if (obs_weight[i] > 0.0) values.push_back(data.z()[i]);
  }
  Target target;
  target.grid = tabulate(Q, x0, std::move(values));
  auto& w = target.weights;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    w.node_row.push_back(target.grid.row_of(rule.nodes[k]));
    w.node_weight.push_back(rule.weights[k]);
  }
  w.obs_weight = std::move(obs_weight);
  w.obs_row.resize(data.n(), no_row);
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (w.obs_weight[i] > 0.0) w.obs_row[i] = target.grid.row_of(data.z()[i]);
  }
  w.row_weight.resize(target.grid.z.size());
  for (std::size_t k = 0; k < target.grid.z.size(); ++k) w.row_weight[k] = weight_at(spec, target.grid.z[k]);
  return target;
}

}  // namespace napkin
