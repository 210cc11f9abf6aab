#pragma once

#include "napkin/estimators.hpp"
#include "napkin/nuisance.hpp"
#include "napkin/simulation.hpp"
#include "napkin/weight.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace napkin {

// One estimator column of a study: the ATE under `weight`, or the optimal
// combination over `levels` when kind = optimal (with `base` per level).
struct EstimatorRequest {
  std::string label;
  EstimatorKind kind = EstimatorKind::tmle;
  WeightSpec weight = FixedLevel{0.0};
  EstimatorKind base = EstimatorKind::tmle;
  std::vector<double> levels;
};

// Nuisance strategy for one arm; an empty spec means the analytic nuisances.
struct Arm {
  std::string name;
  std::optional<NuisanceSpec> spec;
};

struct Scenario {
  std::string id;
  Dgp dgp = Dgp::sim1_binary;
  std::size_t n = 2000;
  std::size_t reps = 500;
  std::uint64_t seed = 1;
  std::vector<EstimatorRequest> estimators;
  std::vector<Arm> arms;
  StoppingRule rule;
  double clip_epsilon = 1e-3;
};

const std::vector<std::string>& scenario_ids();
// Built-in scenario by id; unknown ids raise a validation error.
Scenario default_scenario(const std::string& id);
void check_scenario(const Scenario& scenario);

struct StudyCell {
  std::string estimator;
  std::string arm;
  std::size_t completed = 0;
  std::size_t excluded = 0;
  double mean = 0.0;
  double median = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double mse = 0.0;
  double coverage = 0.0;
  double ci_width = 0.0;
  double mean_se = 0.0;
  double converged_fraction = 1.0;
  double median_across_iterations = 0.0;
  std::vector<double> points;  // completed replicates in replicate order
};

struct StudyReport {
  std::string scenario;
  std::size_t n = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  double truth = 0.0;
  std::vector<StudyCell> cells;

  const StudyCell& cell(const std::string& estimator, const std::string& arm) const;
};

// Runs every replicate with its own stream seeded by mix_seed(seed, r).
// The report does not depend on the thread count.
StudyReport run_study(const Scenario& scenario, unsigned threads = 1);

std::string report_json(const StudyReport& report, bool include_points = false);
std::string report_csv(const StudyReport& report);
std::string report_table(const StudyReport& report);

}  // namespace napkin
