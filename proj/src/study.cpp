#include "napkin/study.hpp"

#include "napkin/error.hpp"
#include "napkin/verma.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace napkin {

namespace {

LearnerSpec learner(LearnerKind kind, std::vector<std::string> terms = {}) {
  LearnerSpec spec;
  spec.learner = kind;
  spec.terms = std::move(terms);
  return spec;
}

LearnerSpec intercept_only(LearnerKind kind) {
  LearnerSpec spec = learner(kind);
  spec.covariate_indices = std::vector<std::size_t>{};
  spec.include_z = false;
  spec.include_treatment = false;
  return spec;
}

NuisanceSpec nuisances(LearnerSpec mu, LearnerSpec pi, LearnerSpec fz) {
  NuisanceSpec spec;
  spec.mu = std::move(mu);
  spec.pi = std::move(pi);
  spec.fz = std::move(fz);
  return spec;
}

const std::vector<std::string> sim1_mu_terms{"x", "z", "z:w", "w", "(1-w):(1-x):(1-z)"};
const std::vector<std::string> sim3_mu_terms{"x:z", "w:x", "x:z:w"};

std::string short_label(const WeightSpec& w) {
  if (const auto* f = std::get_if<FixedLevel>(&w)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "z%g", f->z_star);
    return buf;
  }
  if (const auto* d = std::get_if<Density>(&w)) {
    return d->family == DensityFamily::uniform ? "uniform" : "normal";
  }
  return "pointmass";
}

void add_fixed_levels(Scenario& s, const std::vector<EstimatorKind>& kinds, const std::vector<double>& levels,
                      bool optimal) {
  for (EstimatorKind kind : kinds) {
    for (double z : levels) {
      EstimatorRequest r;
      r.kind = kind;
      r.weight = FixedLevel{z};
      r.label = std::string(to_string(kind)) + "_" + short_label(r.weight);
      s.estimators.push_back(r);
    }
    if (optimal) {
      EstimatorRequest r;
      r.kind = EstimatorKind::optimal;
      r.base = kind;
      r.levels = levels;
      r.label = std::string(to_string(kind)) + "_opt";
      s.estimators.push_back(r);
    }
  }
}

void add_weights(Scenario& s, const std::vector<EstimatorKind>& kinds, const std::vector<WeightSpec>& weights) {
  for (EstimatorKind kind : kinds) {
    for (const auto& w : weights) {
      EstimatorRequest r;
      r.kind = kind;
      r.weight = w;
      r.label = std::string(to_string(kind)) + "_" + short_label(w);
      s.estimators.push_back(r);
    }
  }
}

const std::vector<EstimatorKind> main_kinds{EstimatorKind::tmle, EstimatorKind::onestep, EstimatorKind::esteq};

struct Outcome {
  bool ok = false;
  double point = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool converged = true;
  int across = 0;
};

EstimateResult run_request(const Dataset& data, const NuisanceSet& Q, const EstimatorRequest& r,
                           const StoppingRule& rule) {
  if (r.kind == EstimatorKind::optimal) return estimate_optimal_ate(data, Q, r.base, r.levels, rule);
  return estimate_ate(data, Q, r.kind, r.weight, rule);
}

std::vector<Outcome> run_replicate(const Scenario& s, std::size_t rep) {
  const std::size_t width = s.estimators.size();
  std::vector<Outcome> out(width * s.arms.size());
  Rng rng(mix_seed(s.seed, rep));
  const Dataset data = sample(s.dgp, s.n, rng);
  for (std::size_t a = 0; a < s.arms.size(); ++a) {
    std::optional<NuisanceSet> Q;
    try {
      if (s.arms[a].spec) {
        NuisanceSpec spec = *s.arms[a].spec;
        spec.clip_epsilon = s.clip_epsilon;
        Q.emplace(fit_nuisance_set(data, spec));
      } else {
        Q.emplace(true_nuisances(s.dgp, data, s.clip_epsilon));
      }
    } catch (const Error&) {
      continue;
    }
    for (std::size_t e = 0; e < width; ++e) {
      try {
        const EstimateResult r = run_request(data, *Q, s.estimators[e], s.rule);
        if (!std::isfinite(r.point) || !std::isfinite(r.se)) continue;
        Outcome& o = out[a * width + e];
        o.ok = true;
        o.point = r.point;
        o.se = r.se;
        o.lo = r.ci_lo;
        o.hi = r.ci_hi;
        o.converged = r.diagnostics.converged;
        o.across = r.diagnostics.across_iterations;
      } catch (const Error&) {
      }
    }
  }
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

StudyCell aggregate(const std::vector<std::vector<Outcome>>& reps, std::size_t index, double truth) {
  StudyCell cell;
  std::vector<double> across;
  double covered = 0.0;
  double width = 0.0;
  double se_sum = 0.0;
  double converged = 0.0;
  for (const auto& rep : reps) {
    const Outcome& o = rep[index];
    if (!o.ok) {
      ++cell.excluded;
      continue;
    }
    cell.points.push_back(o.point);
    covered += (o.lo <= truth && truth <= o.hi) ? 1.0 : 0.0;
    width += o.hi - o.lo;
    se_sum += o.se;
    converged += o.converged ? 1.0 : 0.0;
    across.push_back(o.across);
  }
  cell.completed = cell.points.size();
  if (cell.completed == 0) return cell;
  const double m = static_cast<double>(cell.completed);
  double sum = 0.0;
  for (double p : cell.points) sum += p;
  cell.mean = sum / m;
  cell.median = median_of(cell.points);
  cell.bias = cell.mean - truth;
  double ss = 0.0;
  double sq_err = 0.0;
  for (double p : cell.points) {
    ss += (p - cell.mean) * (p - cell.mean);
    sq_err += (p - truth) * (p - truth);
  }
  cell.sd = cell.completed > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
  cell.mse = sq_err / m;
  cell.coverage = covered / m;
  cell.ci_width = width / m;
  cell.mean_se = se_sum / m;
  cell.converged_fraction = converged / m;
  cell.median_across_iterations = median_of(across);
  return cell;
}

}  // namespace

const std::vector<std::string>& scenario_ids() {
  static const std::vector<std::string> ids{"sim1_binary", "sim1_continuous", "sim2", "sim3", "sim4_binary"};
  return ids;
}

Scenario default_scenario(const std::string& id) {
  Scenario s;
  s.id = id;
  if (id == "sim1_binary") {
    s.dgp = Dgp::sim1_binary;
    s.arms.push_back({"correct", nuisances(learner(LearnerKind::least_squares, sim1_mu_terms),
                                           learner(LearnerKind::logistic, {"z", "w", "z:w"}),
                                           learner(LearnerKind::logistic, {"w"}))});
    add_fixed_levels(s, main_kinds, {0.0, 1.0}, true);
  } else if (id == "sim1_continuous") {
    s.dgp = Dgp::sim1_continuous;
    s.arms.push_back({"correct", nuisances(learner(LearnerKind::least_squares, sim1_mu_terms),
                                           learner(LearnerKind::least_squares, {"w", "z:w"}),
                                           learner(LearnerKind::stratified_uniform))});
    add_weights(s, main_kinds, {Density::uniform(0.1, 0.25), Density::normal(0.15, 0.03)});
  } else if (id == "sim2") {
    s.dgp = Dgp::sim1_continuous;
    const LearnerSpec mu_ok = learner(LearnerKind::least_squares, sim1_mu_terms);
    const LearnerSpec mu_bad = learner(LearnerKind::least_squares);
    const LearnerSpec pi_ok = learner(LearnerKind::least_squares, {"w", "z:w"});
    const LearnerSpec pi_bad = learner(LearnerKind::logistic);
    const LearnerSpec fz_ok = learner(LearnerKind::stratified_uniform);
    const LearnerSpec fz_bad = learner(LearnerKind::conditional_gaussian);
    const LearnerSpec fz_intercept = intercept_only(LearnerKind::conditional_gaussian);
    s.arms.push_back({"fz_pi_correct", nuisances(mu_bad, pi_ok, fz_ok)});
    s.arms.push_back({"mu_pi_correct", nuisances(mu_ok, pi_ok, fz_bad)});
    s.arms.push_back({"all_misspecified", nuisances(mu_bad, pi_bad, fz_intercept)});
    add_weights(s, main_kinds, {Density::uniform(0.1, 0.25)});
  } else if (id == "sim3") {
    s.dgp = Dgp::sim3;
    s.n = 500;
    s.arms.push_back({"correct", nuisances(learner(LearnerKind::least_squares, sim3_mu_terms),
                                           learner(LearnerKind::least_squares, {"w", "z", "z:w"}),
                                           learner(LearnerKind::logistic, {"w"}))});
    add_fixed_levels(s, main_kinds, {0.0, 1.0}, true);
  } else if (id == "sim4_binary") {
    s.dgp = Dgp::sim4_binary;
    s.n = 1000;
    s.arms.push_back({"glm", nuisances(learner(LearnerKind::least_squares), learner(LearnerKind::logistic),
                                       learner(LearnerKind::logistic))});
    add_fixed_levels(s, main_kinds, {0.0, 1.0}, false);
  } else {
    fail_validation("unknown scenario '" + id + "'");
  }
  return s;
}

void check_scenario(const Scenario& s) {
  if (s.reps < 1) fail_validation("reps must be >= 1");
  if (s.n < 50) fail_validation("n must be >= 50");
  if (s.estimators.empty()) fail_validation("scenario has no estimators");
  if (s.arms.empty()) fail_validation("scenario has no arms");
  if (!(s.clip_epsilon > 0.0 && s.clip_epsilon <= 0.1)) fail_validation("clip_epsilon must lie in (0, 0.1]");
  check_stopping_rule(s.rule);
  for (const auto& e : s.estimators) {
    if (e.kind == EstimatorKind::optimal) {
      if (e.levels.size() < 2) fail_validation("optimal estimator needs at least two levels");
      if (e.base == EstimatorKind::optimal || e.base == EstimatorKind::plugin) {
        fail_validation("optimal estimator needs an esteq, onestep or tmle base");
      }
    } else {
      check_weightspec(e.weight);
    }
  }
}

const StudyCell& StudyReport::cell(const std::string& estimator, const std::string& arm) const {
  for (const auto& c : cells) {
    if (c.estimator == estimator && c.arm == arm) return c;
  }
  fail_validation("no study cell " + estimator + "/" + arm);
}

StudyReport run_study(const Scenario& scenario, unsigned threads) {
  check_scenario(scenario);
  std::vector<std::vector<Outcome>> results(scenario.reps);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < scenario.reps; r = next++) results[r] = run_replicate(scenario, r);
  };
  const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(scenario.reps)));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  StudyReport report;
  report.scenario = scenario.id;
  report.n = scenario.n;
  report.reps = scenario.reps;
  report.seed = scenario.seed;
  report.truth = population_truth(scenario.dgp);
  const std::size_t width = scenario.estimators.size();
  for (std::size_t a = 0; a < scenario.arms.size(); ++a) {
    for (std::size_t e = 0; e < width; ++e) {
      StudyCell cell = aggregate(results, a * width + e, report.truth);
      cell.estimator = scenario.estimators[e].label;
      cell.arm = scenario.arms[a].name;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::string report_json(const StudyReport& report, bool include_points) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json j{{"estimator", c.estimator},
                     {"arm", c.arm},
                     {"completed", c.completed},
                     {"excluded", c.excluded},
                     {"mean", c.mean},
                     {"median", c.median},
                     {"bias", c.bias},
                     {"sd", c.sd},
                     {"mse", c.mse},
                     {"coverage", c.coverage},
                     {"ci_width", c.ci_width},
                     {"mean_se", c.mean_se},
                     {"converged_fraction", c.converged_fraction},
                     {"median_across_iterations", c.median_across_iterations}};
    if (include_points) j["points"] = c.points;
    cells.push_back(std::move(j));
  }
  nlohmann::json out{{"scenario", report.scenario}, {"n", report.n},         {"reps", report.reps},
                     {"seed", report.seed},         {"truth", report.truth}, {"cells", std::move(cells)}};
  return out.dump(2) + "\n";
}

std::string report_csv(const StudyReport& report) {
  std::ostringstream os;
  os << "estimator,arm,completed,excluded,mean,median,bias,sd,mse,coverage,ci_width,mean_se,converged_fraction\n";
  char buf[512];
  for (const auto& c : report.cells) {
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  c.estimator.c_str(), c.arm.c_str(), c.completed, c.excluded, c.mean, c.median, c.bias, c.sd, c.mse,
                  c.coverage, c.ci_width, c.mean_se, c.converged_fraction);
    os << buf;
  }
  return os.str();
}

std::string report_table(const StudyReport& report) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "scenario %s  n=%zu  reps=%zu  seed=%llu  truth=%.4f\n", report.scenario.c_str(),
                report.n, report.reps, static_cast<unsigned long long>(report.seed), report.truth);
  os << buf;
  std::snprintf(buf, sizeof buf, "%-18s %-18s %9s %9s %9s %9s %9s %5s\n", "estimator", "arm", "bias", "sd", "mse",
                "coverage", "ci_width", "excl");
  os << buf;
  for (const auto& c : report.cells) {
    std::snprintf(buf, sizeof buf, "%-18s %-18s %9.4f %9.4f %9.4f %8.1f%% %9.4f %5zu\n", c.estimator.c_str(),
                  c.arm.c_str(), c.bias, c.sd, c.mse, 100.0 * c.coverage, c.ci_width, c.excluded);
    os << buf;
  }
  return os.str();
}

}  // namespace napkin
