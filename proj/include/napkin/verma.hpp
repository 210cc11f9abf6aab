#pragma once

#include "napkin/estimators.hpp"

#include <string>
#include <vector>

namespace napkin {

struct AlphaSolution {
  Eigen::VectorXd alpha;  // weights of the first K-1 influence functions
  double hessian_condition = 1.0;
  bool regularized = false;
};

// alpha weights if1 and 1 - alpha weights if0.
AlphaSolution optimal_alpha_binary(const std::vector<double>& if0, const std::vector<double>& if1);
// alpha_i weights ifs[i] for i < K-1; the last vector takes 1 - sum(alpha).
AlphaSolution optimal_alpha_multi(const std::vector<std::vector<double>>& ifs);

// Mean square of sum_i alpha_i Phi_i + (1 - sum alpha) Phi_K.
double weighted_second_moment(const std::vector<std::vector<double>>& ifs, const Eigen::VectorXd& alpha);

// Combines per-level results (same estimand, same observations) with the
// variance-minimizing weights.
EstimateResult combine_optimal(const std::vector<EstimateResult>& per_level);

EstimateResult estimate_optimal(const Dataset& data, const NuisanceSet& Q, int x0, EstimatorKind kind,
                                const std::vector<double>& levels, const StoppingRule& rule = {});
EstimateResult estimate_optimal_ate(const Dataset& data, const NuisanceSet& Q, EstimatorKind kind,
                                    const std::vector<double>& levels, const StoppingRule& rule = {});

struct VermaProbe {
  std::string label;
  double psi = 0.0;
  double se = 0.0;
};

struct VermaReport {
  std::vector<VermaProbe> probes;
  double max_standardized_difference = 0.0;
  std::size_t first = 0;  // probes attaining the maximum
  std::size_t second = 1;
};

// psi(z) and its IF-based se at each probe, and the largest pairwise
// |psi_i - psi_j| / (sd(IF_i - IF_j) / sqrt(n)).
VermaReport verma_diagnostic(const Dataset& data, const NuisanceSet& Q, int x0, const std::vector<WeightSpec>& probes,
                             EstimatorKind kind = EstimatorKind::plugin, const StoppingRule& rule = {});

// Estimates under each candidate weight for continuous Z, for comparing variances.
std::vector<EstimateResult> compare_weight_specs(const Dataset& data, const NuisanceSet& Q, EstimatorKind kind,
                                                 const std::vector<WeightSpec>& candidates,
                                                 const StoppingRule& rule = {});

}  // namespace napkin
