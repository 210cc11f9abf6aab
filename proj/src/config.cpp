#include "napkin/config.hpp"

#include "napkin/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace napkin {

namespace {

using nlohmann::json;

void only_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail_validation(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) fail_validation("unknown key '" + it.key() + "' in " + where);
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail_validation(where + " must be a number");
  return j.get<double>();
}

long long integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail_validation(where + " must be an integer");
  return j.get<long long>();
}

bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail_validation(where + " must be a boolean");
  return j.get<bool>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) fail_validation(where + " must be a string");
  return j.get<std::string>();
}

std::vector<std::string> strings(const json& j, const std::string& where) {
  if (j.is_string()) return {j.get<std::string>()};
  if (!j.is_array()) fail_validation(where + " must be a string or a list of strings");
  std::vector<std::string> out;
  for (const auto& v : j) out.push_back(text(v, where));
  return out;
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) fail_validation(where + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, where));
  return out;
}

int bounded_int(const json& j, const std::string& where, long long lo) {
  const long long v = integer(j, where);
  if (v < lo || v > 1000000) fail_validation(where + " out of range");
  return static_cast<int>(v);
}

RoleMap parse_roles(const json& j) {
  only_keys(j, "roles", {"w", "z", "x", "y", "c", "z_kind", "level_cap"});
  RoleMap roles;
  if (!j.contains("w") || !j.contains("z") || !j.contains("x") || !j.contains("y")) {
    fail_validation("roles must name w, z, x and y");
  }
  roles.w = strings(j["w"], "roles.w");
  if (roles.w.empty()) fail_validation("roles.w needs at least one column");
  roles.z = text(j["z"], "roles.z");
  roles.x = text(j["x"], "roles.x");
  roles.y = text(j["y"], "roles.y");
  if (j.contains("c")) roles.c = strings(j["c"], "roles.c");
  if (j.contains("z_kind")) {
    const std::string kind = text(j["z_kind"], "roles.z_kind");
    if (kind == "auto") {
      roles.z_kind = ZKindRequest::automatic;
    } else if (kind == "discrete") {
      roles.z_kind = ZKindRequest::discrete;
    } else if (kind == "continuous") {
      roles.z_kind = ZKindRequest::continuous;
    } else {
      fail_validation("roles.z_kind must be auto, discrete or continuous");
    }
  }
  if (j.contains("level_cap")) roles.level_cap = bounded_int(j["level_cap"], "roles.level_cap", 1);
  return roles;
}

LearnerSpec parse_learner(const json& j, const std::string& where, LearnerKind fallback) {
  only_keys(j, where, {"learner", "covariates", "include_treatment", "include_z", "include_confounders", "terms", "k"});
  LearnerSpec spec;
  spec.learner = j.contains("learner") ? parse_learner_kind(text(j["learner"], where + ".learner")) : fallback;
  if (j.contains("covariates")) {
    if (!j["covariates"].is_array()) fail_validation(where + ".covariates must be a list of indices");
    std::vector<std::size_t> idx;
    for (const auto& v : j["covariates"]) {
      const long long i = integer(v, where + ".covariates");
      if (i < 0) fail_validation(where + ".covariates must be nonnegative");
      idx.push_back(static_cast<std::size_t>(i));
    }
    spec.covariate_indices = std::move(idx);
  }
  if (j.contains("include_treatment")) spec.include_treatment = boolean(j["include_treatment"], where);
  if (j.contains("include_z")) spec.include_z = boolean(j["include_z"], where);
  if (j.contains("include_confounders")) spec.include_confounders = boolean(j["include_confounders"], where);
  if (j.contains("terms")) spec.terms = strings(j["terms"], where + ".terms");
  if (j.contains("k")) spec.k = bounded_int(j["k"], where + ".k", 1);
  return spec;
}

NuisanceSpec parse_nuisance(const json& j) {
  only_keys(j, "nuisance", {"mu", "pi", "fz", "cross_fit_folds", "fold_seed", "mu_z_shift"});
  NuisanceSpec spec;
  if (j.contains("mu")) spec.mu = parse_learner(j["mu"], "nuisance.mu", LearnerKind::least_squares);
  if (j.contains("pi")) spec.pi = parse_learner(j["pi"], "nuisance.pi", LearnerKind::logistic);
  if (j.contains("fz")) spec.fz = parse_learner(j["fz"], "nuisance.fz", LearnerKind::logistic);
  if (j.contains("cross_fit_folds")) spec.cross_fit_folds = bounded_int(j["cross_fit_folds"], "cross_fit_folds", 1);
  if (j.contains("fold_seed")) {
    if (!j["fold_seed"].is_number_unsigned()) fail_validation("fold_seed must be a nonnegative integer");
    spec.fold_seed = j["fold_seed"].get<std::uint64_t>();
  }
  if (j.contains("mu_z_shift")) spec.mu_z_shift = number(j["mu_z_shift"], "nuisance.mu_z_shift");
  return spec;
}

WeightSpec parse_weight(const json& j) {
  if (!j.is_object() || !j.contains("type")) fail_validation("weight needs a type");
  const std::string type = text(j["type"], "weight.type");
  WeightSpec spec;
  if (type == "fixed") {
    only_keys(j, "weight", {"type", "z_star"});
    if (!j.contains("z_star")) fail_validation("fixed weight needs z_star");
    spec = FixedLevel{number(j["z_star"], "weight.z_star")};
  } else if (type == "point_mass") {
    only_keys(j, "weight", {"type", "levels", "probs"});
    if (!j.contains("levels") || !j.contains("probs")) fail_validation("point_mass weight needs levels and probs");
    PointMass pm{numbers(j["levels"], "weight.levels"), numbers(j["probs"], "weight.probs")};
    if (pm.levels.size() != pm.probs.size() || pm.levels.empty()) {
      fail_validation("point_mass levels and probs must be nonempty and of equal length");
    }
    spec = std::move(pm);
  } else if (type == "uniform") {
    only_keys(j, "weight", {"type", "a", "b", "nodes"});
    if (!j.contains("a") || !j.contains("b")) fail_validation("uniform weight needs a and b");
    const int nodes = j.contains("nodes") ? bounded_int(j["nodes"], "weight.nodes", 0) : 64;
    spec = Density::uniform(number(j["a"], "weight.a"), number(j["b"], "weight.b"), nodes);
  } else if (type == "normal") {
    only_keys(j, "weight", {"type", "mean", "sd", "nodes"});
    if (!j.contains("mean") || !j.contains("sd")) fail_validation("normal weight needs mean and sd");
    const int nodes = j.contains("nodes") ? bounded_int(j["nodes"], "weight.nodes", 0) : 128;
    spec = Density::normal(number(j["mean"], "weight.mean"), number(j["sd"], "weight.sd"), nodes);
  } else {
    fail_validation("weight.type must be fixed, point_mass, uniform or normal");
  }
  check_weightspec(spec);
  return spec;
}

StoppingRule parse_stopping(const json& j) {
  only_keys(j, "stopping", {"c_stop", "max_across", "max_within"});
  StoppingRule rule;
  if (j.contains("c_stop")) rule.c_stop = number(j["c_stop"], "stopping.c_stop");
  if (j.contains("max_across")) rule.max_across = bounded_int(j["max_across"], "stopping.max_across", 1);
  if (j.contains("max_within")) rule.max_within = bounded_int(j["max_within"], "stopping.max_within", 1);
  check_stopping_rule(rule);
  return rule;
}

}  // namespace

LearnerKind parse_learner_kind(const std::string& name) {
  if (name == "least_squares") return LearnerKind::least_squares;
  if (name == "logistic") return LearnerKind::logistic;
  if (name == "knn") return LearnerKind::knn;
  if (name == "conditional_gaussian") return LearnerKind::conditional_gaussian;
  if (name == "stratified_uniform") return LearnerKind::stratified_uniform;
  fail_validation("unknown learner '" + name + "'");
}

const char* to_string(LearnerKind kind) noexcept {
  switch (kind) {
    case LearnerKind::least_squares: return "least_squares";
    case LearnerKind::logistic: return "logistic";
    case LearnerKind::knn: return "knn";
    case LearnerKind::conditional_gaussian: return "conditional_gaussian";
    case LearnerKind::stratified_uniform: return "stratified_uniform";
  }
  return "?";
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail_parse(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(j, "config",
            {"roles", "nuisance", "weight", "estimators", "optimal", "clip_epsilon", "seed", "stopping", "kappa_c"});
  RunConfig cfg;
  if (!j.contains("roles")) fail_validation("config needs roles");
  cfg.roles = parse_roles(j["roles"]);
  if (j.contains("nuisance")) cfg.nuisance = parse_nuisance(j["nuisance"]);
  if (j.contains("clip_epsilon")) {
    const double eps = number(j["clip_epsilon"], "clip_epsilon");
    if (!(eps > 0.0 && eps <= 0.1)) fail_validation("clip_epsilon must lie in (0, 0.1]");
    cfg.nuisance.clip_epsilon = eps;
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail_validation("seed must be a nonnegative integer");
    cfg.nuisance.fold_seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("weight")) cfg.weight = parse_weight(j["weight"]);
  if (j.contains("estimators")) {
    cfg.estimators.clear();
    for (const auto& name : strings(j["estimators"], "estimators")) {
      try {
        cfg.estimators.push_back(parse_estimator_kind(name));
      } catch (const Error&) {
        fail_validation("unknown estimator '" + name + "'");
      }
    }
    if (cfg.estimators.empty()) fail_validation("estimators must not be empty");
  }
  if (j.contains("optimal")) {
    const json& o = j["optimal"];
    only_keys(o, "optimal", {"levels", "base"});
    if (o.contains("levels")) cfg.optimal_levels = numbers(o["levels"], "optimal.levels");
    if (o.contains("base")) cfg.optimal_base = parse_estimator_kind(text(o["base"], "optimal.base"));
  }
  for (EstimatorKind k : cfg.estimators) {
    if (k == EstimatorKind::optimal) {
      if (cfg.optimal_levels.size() < 2) fail_validation("optimal estimator needs optimal.levels with at least two values");
      if (cfg.optimal_base == EstimatorKind::optimal || cfg.optimal_base == EstimatorKind::plugin) {
        fail_validation("optimal.base must be esteq, onestep or tmle");
      }
    } else if (!cfg.weight) {
      fail_validation("config needs a weight for estimator " + std::string(to_string(k)));
    }
  }
  if (j.contains("stopping")) cfg.stopping = parse_stopping(j["stopping"]);
  if (j.contains("kappa_c")) {
    const std::string name = text(j["kappa_c"], "kappa_c");
    if (name == "auto") {
      cfg.kappa_c = KappaCLearner::automatic;
    } else if (name == "saturated") {
      cfg.kappa_c = KappaCLearner::saturated;
    } else if (name == "least_squares") {
      cfg.kappa_c = KappaCLearner::least_squares;
    } else {
      fail_validation("kappa_c must be auto, saturated or least_squares");
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_validation("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

}  // namespace napkin
