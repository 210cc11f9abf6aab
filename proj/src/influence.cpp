#include "napkin/influence.hpp"

#include "napkin/error.hpp"
#include "napkin/identification.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace napkin {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

InfluenceValues influence_on_target(const Dataset& data, const Target& target, const InfluenceOptions& options) {
  const auto& grid = target.grid;
  const auto& tw = target.weights;
  const std::size_t n = data.n();
  if (tw.obs_weight.size() != n) fail_validation("target and dataset sizes differ");
  if (options.kappa2 && !(*options.kappa2 >= kappa2_floor)) {
    std::ostringstream msg;
    msg << "kappa2 = " << *options.kappa2 << " is below " << kappa2_floor;
    fail_degenerate(msg.str());
  }
  const std::vector<double> psi = psi_by_row(grid);
  std::vector<double> kappa2(grid.z.size());
  for (std::size_t k = 0; k < grid.z.size(); ++k) kappa2[k] = options.kappa2 ? *options.kappa2 : grid.kappa2(k);
  auto centre = [&](std::size_t row) { return options.center ? *options.center : psi[row]; };

  // Phi_W depends on the observation only through its covariate group.
  const auto groups = static_cast<std::size_t>(grid.mu.cols());
  std::vector<double> phi_w_group(groups, 0.0);
  for (std::size_t j = 0; j < tw.node_row.size(); ++j) {
    const auto row = static_cast<Eigen::Index>(tw.node_row[j]);
    const double scale = tw.node_weight[j] / kappa2[tw.node_row[j]];
    const double c = centre(tw.node_row[j]);
    for (std::size_t g = 0; g < groups; ++g) {
      const auto gi = static_cast<Eigen::Index>(g);
      phi_w_group[g] += scale * grid.pi(row, gi) * (grid.mu(row, gi) - c);
    }
  }

  InfluenceValues out;
  out.phi.resize(n);
  out.phi_Y.assign(n, 0.0);
  out.phi_X.assign(n, 0.0);
  out.phi_W.resize(n);
  const int x0 = grid.x0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = grid.obs_group[i];
    out.phi_W[i] = phi_w_group[g];
    const std::size_t row = tw.obs_row[i];
    if (row != no_row) {
      const auto r = static_cast<Eigen::Index>(row);
      const auto gi = static_cast<Eigen::Index>(g);
      const double ratio = tw.obs_weight[i] / (kappa2[row] * grid.fz(r, gi));
      const double treated = data.x()[i] == x0 ? 1.0 : 0.0;
      const double mu = grid.mu(r, gi);
      out.phi_Y[i] = treated * ratio * (data.y()[i] - mu);
      out.phi_X[i] = ratio * (mu - centre(row)) * (treated - grid.pi(r, gi));
    }
    out.phi[i] = out.phi_Y[i] + out.phi_X[i] + out.phi_W[i];
  }
  for (std::size_t row : tw.node_row) {
    out.per_node_cache.z.push_back(grid.z[row]);
    out.per_node_cache.kappa2.push_back(grid.kappa2(row));
    out.per_node_cache.psi.push_back(psi[row]);
  }
  return out;
}

InfluenceValues influence_discrete(const Dataset& data, const NuisanceSet& Q, double z_star, int x0,
                                   const InfluenceOptions& options) {
  const WeightSpec spec = FixedLevel{z_star};
  validate_weightspec(spec, data);
  return influence_on_target(data, make_target(data, Q, spec, x0), options);
}

InfluenceValues influence_continuous(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0,
                                     const InfluenceOptions& options) {
  if (is_fixed_level(spec)) fail_validation("continuous influence needs a point-mass or density weight");
  check_weightspec(spec);
  return influence_on_target(data, make_target(data, Q, spec, x0), options);
}

}  // namespace napkin
