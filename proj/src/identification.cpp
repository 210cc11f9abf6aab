#include "napkin/identification.hpp"

#include "napkin/error.hpp"

#include <sstream>

namespace napkin {

namespace {

[[noreturn]] void degenerate_kappa2(double z, double value) {
  std::ostringstream msg;
  msg << "kappa2 = " << value << " at z = " << z << " is below " << kappa2_floor;
  fail_degenerate(msg.str());
}

}  // namespace

double kappa1_plugin(const NuisanceSet& Q, double z, int x0) {
  check_treatment_level(x0);
  double total = 0.0;
  for (std::size_t g = 0; g < Q.group_count(); ++g) {
    const std::size_t r = Q.group_representative(g);
    total += Q.group_weight(g) * Q.mu(x0, z, r) * Q.pi(x0, z, r);
  }
  return total;
}

double kappa2_plugin(const NuisanceSet& Q, double z, int x0, std::vector<std::string>* warnings) {
  check_treatment_level(x0);
  double total = 0.0;
  for (std::size_t g = 0; g < Q.group_count(); ++g) {
    total += Q.group_weight(g) * Q.pi(x0, z, Q.group_representative(g));
  }
  if (warnings && total < kappa2_floor) {
    std::ostringstream msg;
    msg << "near-degenerate kappa2 = " << total << " at z = " << z;
    warnings->push_back(msg.str());
  }
  return total;
}

double psi_plugin_at(const NuisanceSet& Q, double z, int x0) {
  const double k2 = kappa2_plugin(Q, z, x0);
  if (!(k2 >= kappa2_floor)) degenerate_kappa2(z, k2);
  return kappa1_plugin(Q, z, x0) / k2;
}

double psi_plugin_weighted(const NuisanceSet& Q, const WeightSpec& spec, int x0) {
  const QuadratureRule rule = build_quadrature(spec);
  double total = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) total += rule.weights[k] * psi_plugin_at(Q, rule.nodes[k], x0);
  return total;
}

std::vector<double> psi_by_row(const NuisanceGrid& grid) {
  std::vector<double> psi(grid.z.size());
  for (std::size_t k = 0; k < grid.z.size(); ++k) {
    const double k2 = grid.kappa2(k);
    if (!(k2 >= kappa2_floor)) degenerate_kappa2(grid.z[k], k2);
    psi[k] = grid.kappa1(k) / k2;
  }
  return psi;
}

double psi_on_target(const Target& target) {
  const auto& w = target.weights;
  double total = 0.0;
  for (std::size_t j = 0; j < w.node_row.size(); ++j) {
    const std::size_t row = w.node_row[j];
    const double k2 = target.grid.kappa2(row);
    if (!(k2 >= kappa2_floor)) degenerate_kappa2(target.grid.z[row], k2);
    total += w.node_weight[j] * target.grid.kappa1(row) / k2;
  }
  return total;
}

}  // namespace napkin
