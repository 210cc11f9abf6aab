#pragma once

#include "napkin/dataset.hpp"
#include "napkin/grid.hpp"
#include "napkin/nuisance.hpp"
#include "napkin/weight.hpp"

#include <optional>
#include <vector>

namespace napkin {

struct NodeCache {
  std::vector<double> z;
  std::vector<double> kappa2;
  std::vector<double> psi;
};

struct InfluenceValues {
  std::vector<double> phi;
  std::vector<double> phi_Y;
  std::vector<double> phi_X;
  std::vector<double> phi_W;
  std::vector<double> phi_C;  // confounder case only
  NodeCache per_node_cache;
};

struct InfluenceOptions {
  // Constant replacing psi(z) in every centering term (estimating-equation form).
  std::optional<double> center;
  // Constant replacing kappa2(z) in every denominator (AIPW form of the discrete one-step).
  std::optional<double> kappa2;
};

// Influence values on a tabulated target; the building block of every estimator.
InfluenceValues influence_on_target(const Dataset& data, const Target& target, const InfluenceOptions& options = {});

InfluenceValues influence_discrete(const Dataset& data, const NuisanceSet& Q, double z_star, int x0,
                                   const InfluenceOptions& options = {});
InfluenceValues influence_continuous(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0,
                                     const InfluenceOptions& options = {});

double mean_of(const std::vector<double>& v);
double sd_of(const std::vector<double>& v);  // population (1/n) standard deviation

}  // namespace napkin
