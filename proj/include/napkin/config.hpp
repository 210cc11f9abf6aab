#pragma once

#include "napkin/confounder.hpp"
#include "napkin/dataset.hpp"
#include "napkin/estimators.hpp"
#include "napkin/nuisance.hpp"
#include "napkin/weight.hpp"

#include <optional>
#include <string>
#include <vector>

namespace napkin {

struct RunConfig {
  RoleMap roles;
  NuisanceSpec nuisance;
  std::optional<WeightSpec> weight;
  std::vector<EstimatorKind> estimators{EstimatorKind::tmle};
  std::vector<double> optimal_levels;
  EstimatorKind optimal_base = EstimatorKind::tmle;
  StoppingRule stopping;
  KappaCLearner kappa_c = KappaCLearner::automatic;
};

// Strict parse: unknown keys, wrong types, and out-of-range values are
// validation errors; malformed JSON is a parse error.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

LearnerKind parse_learner_kind(const std::string& name);
const char* to_string(LearnerKind kind) noexcept;

}  // namespace napkin
