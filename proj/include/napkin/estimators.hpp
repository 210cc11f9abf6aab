#pragma once

#include "napkin/dataset.hpp"
#include "napkin/grid.hpp"
#include "napkin/influence.hpp"
#include "napkin/nuisance.hpp"
#include "napkin/weight.hpp"

#include <optional>
#include <string>
#include <vector>

namespace napkin {

enum class Estimand { psi, ate };
enum class EstimatorKind { plugin, esteq, onestep, tmle, optimal };

const char* to_string(EstimatorKind kind) noexcept;
EstimatorKind parse_estimator_kind(const std::string& name);

struct TargetingDiagnostics {
  int across_iterations = 0;
  std::vector<int> within_iterations;
  double final_score_Y = 0.0;
  double final_score_X = 0.0;
  bool converged = true;
  std::size_t clipped_count = 0;
  double c_stop = 0.0;
};

struct EstimateResult {
  Estimand estimand = Estimand::psi;
  int x0 = 1;
  EstimatorKind kind = EstimatorKind::plugin;
  std::string weight;
  double point = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<double> if_values;  // centered, empty for the plug-in
  TargetingDiagnostics diagnostics;
  std::vector<std::string> warnings;
  bool no_inference = false;
  std::vector<double> alpha;  // optimal weighting only
};

inline constexpr double wald_quantile = 1.959963984540054;

// Centers the influence values, sets se = sd/sqrt(n) and the 95% Wald interval.
void attach_inference(EstimateResult& result, std::vector<double> influence);

struct StoppingRule {
  std::optional<double> c_stop;  // default: sd(Phi at initial Q) / (sqrt(n) ln n)
  int max_across = 50;
  int max_within = 50;
};

void check_stopping_rule(const StoppingRule& rule);
double default_c_stop(const std::vector<double>& phi);

EstimateResult estimate_plugin(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0);

EstimateResult estimate_esteq_discrete(const Dataset& data, const NuisanceSet& Q, double z_star, int x0);
EstimateResult estimate_esteq_continuous(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0);

enum class Kappa2Form { aipw, plugin };

EstimateResult estimate_onestep_discrete(const Dataset& data, const NuisanceSet& Q, double z_star, int x0,
                                         Kappa2Form kappa2 = Kappa2Form::aipw);
EstimateResult estimate_onestep_continuous(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec,
                                           int x0);

EstimateResult tmle_discrete(const Dataset& data, const NuisanceSet& Q, double z_star, int x0,
                             const StoppingRule& rule = {});
EstimateResult tmle_continuous(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0,
                               const StoppingRule& rule = {});

EstimateResult ate(const EstimateResult& result1, const EstimateResult& result0);

// Runs the estimator of the given kind for a FixedLevel spec (discrete forms)
// or a PointMass/Density spec (continuous forms).
EstimateResult estimate(const Dataset& data, const NuisanceSet& Q, EstimatorKind kind, const WeightSpec& spec, int x0,
                        const StoppingRule& rule = {});
EstimateResult estimate_ate(const Dataset& data, const NuisanceSet& Q, EstimatorKind kind, const WeightSpec& spec,
                            const StoppingRule& rule = {});

// ---- targeting internals, exposed for property checks ----

// Targeting for discrete Z at a fixed level or for a weighted Z.
enum class TmleForm { discrete, continuous };

struct FluctuationStep {
  enum class Nuisance { mu, pi };
  Nuisance nuisance = Nuisance::pi;
  double epsilon = 0.0;
  Eigen::MatrixXd covariate;  // empty: constant 1
};

// Path of fluctuations applied on top of the frozen initial grid.
class FluctuationState {
 public:
  FluctuationState(NuisanceGrid initial, bool binary_outcome, double clip_epsilon);

  const NuisanceGrid& initial() const { return initial_; }
  const NuisanceGrid& current() const { return current_; }
  const std::vector<FluctuationStep>& path() const { return path_; }
  std::size_t clipped_count() const { return clipped_; }

  void push(FluctuationStep step);
  NuisanceGrid replay() const;

 private:
  static std::size_t apply(NuisanceGrid& grid, const FluctuationStep& step, bool binary_outcome, double clip);

  NuisanceGrid initial_;
  NuisanceGrid current_;
  std::vector<FluctuationStep> path_;
  bool binary_outcome_;
  double clip_;
  std::size_t clipped_ = 0;
};

// Clever covariates on the grid for the pi and mu fluctuations.
Eigen::MatrixXd clever_covariate_pi(const Target& target, TmleForm form);
Eigen::MatrixXd clever_covariate_mu(const Target& target, TmleForm form);
// Empirical losses whose submodels pass through the current grid at epsilon = 0.
double loss_pi(const Dataset& data, const Target& target, TmleForm form);
double loss_mu(const Dataset& data, const Target& target, TmleForm form, bool binary_outcome);

struct TmleRun {
  EstimateResult result;
  Target initial;
  std::vector<FluctuationStep> path;
  NuisanceGrid final_grid;
};

TmleRun run_tmle(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0, TmleForm form,
                 const StoppingRule& rule);

}  // namespace napkin
