#pragma once

#include "napkin/estimators.hpp"
#include "napkin/influence.hpp"

#include <vector>

namespace napkin {

enum class KappaCLearner {
  automatic,      // saturated when C has at most 10 distinct cells, least squares otherwise
  saturated,      // cell means of the pseudo-outcomes within each distinct C row
  least_squares   // regression on (1, C)
};

struct KappaCModels {
  KappaCLearner learner = KappaCLearner::automatic;
  Eigen::VectorXd coefficients_k1;  // least squares only
  Eigen::VectorXd coefficients_k2;
  std::vector<double> k1;  // kappa1(C_i)
  std::vector<double> k2;  // kappa2(C_i), clipped below at 1e-6
  std::size_t clipped = 0;
};

KappaCModels fit_kappa_c(const Dataset& data, const NuisanceSet& Q, double z_star, int x0,
                         KappaCLearner learner = KappaCLearner::automatic);

double psi_plugin_c(const Dataset& data, const NuisanceSet& Q, const KappaCModels& kc);

InfluenceValues influence_confounder(const Dataset& data, const NuisanceSet& Q, const KappaCModels& kc, double z_star,
                                     int x0);

EstimateResult estimate_onestep_c(const Dataset& data, const NuisanceSet& Q, const KappaCModels& kc, double z_star,
                                  int x0);

}  // namespace napkin
