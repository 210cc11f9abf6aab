#include "napkin/estimators.hpp"

#include "napkin/error.hpp"
#include "napkin/identification.hpp"

#include <cmath>
#include <sstream>

namespace napkin {

namespace {

EstimateResult make_result(EstimatorKind kind, const WeightSpec& spec, int x0) {
  EstimateResult r;
  r.kind = kind;
  r.x0 = x0;
  r.weight = describe(spec);
  return r;
}

struct ResidualMeans {
  double outcome = 0.0;    // mean of w_i (1{X=x0} Y - mu pi)
  double treatment = 0.0;  // mean of w_i (1{X=x0} - pi)
  double pi_mean = 0.0;    // mean of pi(x0 | z*, W_i) over all rows
};

// Weighted residual means with w_i = p~(Z_i) / (scale(Z_i) f(Z_i | W_i)).
template <class Scale>
ResidualMeans residual_means(const Dataset& data, const Target& target, Scale scale) {
  const auto& grid = target.grid;
  const auto& tw = target.weights;
  ResidualMeans m;
  const double n = static_cast<double>(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const std::size_t row = tw.obs_row[i];
    if (row == no_row) continue;
    const auto r = static_cast<Eigen::Index>(row);
    const auto g = static_cast<Eigen::Index>(grid.obs_group[i]);
    const double w = tw.obs_weight[i] / (scale(row) * grid.fz(r, g));
    const double treated = data.x()[i] == grid.x0 ? 1.0 : 0.0;
    m.outcome += w * (treated * data.y()[i] - grid.mu(r, g) * grid.pi(r, g));
    m.treatment += w * (treated - grid.pi(r, g));
  }
  m.outcome /= n;
  m.treatment /= n;
  return m;
}

std::string describe_value(const char* what, double v) {
  std::ostringstream msg;
  msg << what << " = " << v;
  return msg.str();
}

}  // namespace

const char* to_string(EstimatorKind kind) noexcept {
  switch (kind) {
    case EstimatorKind::plugin: return "plugin";
    case EstimatorKind::esteq: return "esteq";
    case EstimatorKind::onestep: return "onestep";
    case EstimatorKind::tmle: return "tmle";
    case EstimatorKind::optimal: return "optimal";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(const std::string& name) {
  if (name == "plugin") return EstimatorKind::plugin;
  if (name == "esteq" || name == "ee") return EstimatorKind::esteq;
  if (name == "onestep" || name == "one-step") return EstimatorKind::onestep;
  if (name == "tmle") return EstimatorKind::tmle;
  if (name == "optimal") return EstimatorKind::optimal;
  fail_validation("unknown estimator '" + name + "'");
}

void attach_inference(EstimateResult& result, std::vector<double> influence) {
  const double m = mean_of(influence);
  for (double& v : influence) v -= m;
  result.if_values = std::move(influence);
  result.no_inference = false;
  result.se = sd_of(result.if_values) / std::sqrt(static_cast<double>(result.if_values.size()));
  result.ci_lo = result.point - wald_quantile * result.se;
  result.ci_hi = result.point + wald_quantile * result.se;
}

void check_stopping_rule(const StoppingRule& rule) {
  if (rule.c_stop && !(std::isfinite(*rule.c_stop) && *rule.c_stop > 0.0)) {
    fail_validation("c_stop must be finite and positive");
  }
  if (rule.max_across < 1 || rule.max_within < 1) fail_validation("targeting caps must be >= 1");
}

double default_c_stop(const std::vector<double>& phi) {
  const double n = static_cast<double>(phi.size());
  const double c = sd_of(phi) / (std::sqrt(n) * std::log(std::max(n, 3.0)));
  return c > 0.0 ? c : 1e-12;
}

EstimateResult estimate_plugin(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0) {
  check_treatment_level(x0);
  EstimateResult r = make_result(EstimatorKind::plugin, spec, x0);
  r.warnings = validate_weightspec(spec, data);
  r.point = psi_plugin_weighted(Q, spec, x0);
  r.ci_lo = r.ci_hi = r.point;
  r.no_inference = true;
  return r;
}

EstimateResult estimate_esteq_discrete(const Dataset& data, const NuisanceSet& Q, double z_star, int x0) {
  check_treatment_level(x0);
  const WeightSpec spec = FixedLevel{z_star};
  EstimateResult r = make_result(EstimatorKind::esteq, spec, x0);
  r.warnings = validate_weightspec(spec, data);
  const Target target = make_target(data, Q, spec, x0);
  const auto residual = residual_means(data, target, [](std::size_t) { return 1.0; });
  const double k1 = target.grid.kappa1(0);
  const double k2 = target.grid.kappa2(0);
  const double aipw1 = residual.outcome + k1;
  const double aipw2 = residual.treatment + k2;
  if (!(aipw2 > 0.0)) fail_degenerate(describe_value("AIPW kappa2", aipw2));
  r.point = aipw1 / aipw2;
  const auto phi = influence_on_target(data, target, InfluenceOptions{r.point, std::nullopt});
  r.diagnostics.clipped_count = target.grid.clipped_count;
  attach_inference(r, phi.phi);
  return r;
}

EstimateResult estimate_esteq_continuous(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0) {
  check_treatment_level(x0);
  if (is_fixed_level(spec)) fail_validation("continuous estimating equation needs a point-mass or density weight");
  EstimateResult r = make_result(EstimatorKind::esteq, spec, x0);
  r.warnings = validate_weightspec(spec, data);
  const Target target = make_target(data, Q, spec, x0);
  std::vector<double> k2(target.grid.z.size());
  for (std::size_t k = 0; k < k2.size(); ++k) {
    k2[k] = target.grid.kappa2(k);
    if (!(k2[k] >= kappa2_floor)) fail_degenerate(describe_value("kappa2", k2[k]));
  }
  const auto residual = residual_means(data, target, [&](std::size_t row) { return k2[row]; });
  const double numerator = residual.outcome + psi_on_target(target);
  const double denominator = residual.treatment + 1.0;
  if (!(denominator > 0.0)) fail_degenerate(describe_value("estimating-equation denominator", denominator));
  r.point = numerator / denominator;
  const auto phi = influence_on_target(data, target, InfluenceOptions{r.point, std::nullopt});
  r.diagnostics.clipped_count = target.grid.clipped_count;
  attach_inference(r, phi.phi);
  return r;
}

EstimateResult estimate_onestep_discrete(const Dataset& data, const NuisanceSet& Q, double z_star, int x0,
                                         Kappa2Form kappa2) {
  check_treatment_level(x0);
  const WeightSpec spec = FixedLevel{z_star};
  EstimateResult r = make_result(EstimatorKind::onestep, spec, x0);
  r.warnings = validate_weightspec(spec, data);
  const Target target = make_target(data, Q, spec, x0);
  const double psi = psi_on_target(target);
  InfluenceOptions options;
  if (kappa2 == Kappa2Form::aipw) {
    const auto residual = residual_means(data, target, [](std::size_t) { return 1.0; });
    const double aipw2 = residual.treatment + target.grid.kappa2(0);
    if (!(aipw2 >= kappa2_floor)) fail_degenerate(describe_value("AIPW kappa2", aipw2));
    options.kappa2 = aipw2;
  }
  const auto phi = influence_on_target(data, target, options);
  r.point = psi + mean_of(phi.phi);
  r.diagnostics.clipped_count = target.grid.clipped_count;
  attach_inference(r, phi.phi);
  return r;
}

EstimateResult estimate_onestep_continuous(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec,
                                           int x0) {
  check_treatment_level(x0);
  if (is_fixed_level(spec)) fail_validation("continuous one-step needs a point-mass or density weight");
  EstimateResult r = make_result(EstimatorKind::onestep, spec, x0);
  r.warnings = validate_weightspec(spec, data);
  const Target target = make_target(data, Q, spec, x0);
  const auto phi = influence_on_target(data, target);
  r.point = psi_on_target(target) + mean_of(phi.phi);
  r.diagnostics.clipped_count = target.grid.clipped_count;
  attach_inference(r, phi.phi);
  return r;
}

EstimateResult tmle_discrete(const Dataset& data, const NuisanceSet& Q, double z_star, int x0,
                             const StoppingRule& rule) {
  return run_tmle(data, Q, FixedLevel{z_star}, x0, TmleForm::discrete, rule).result;
}

EstimateResult tmle_continuous(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0,
                               const StoppingRule& rule) {
  if (is_fixed_level(spec)) fail_validation("continuous TMLE needs a point-mass or density weight");
  return run_tmle(data, Q, spec, x0, TmleForm::continuous, rule).result;
}

EstimateResult ate(const EstimateResult& result1, const EstimateResult& result0) {
  if (result1.if_values.size() != result0.if_values.size()) {
    fail_validation("ATE needs influence values on the same observations");
  }
  EstimateResult r;
  r.estimand = Estimand::ate;
  r.kind = result1.kind;
  r.x0 = 1;
  r.weight = result1.weight;
  r.point = result1.point - result0.point;
  r.warnings = result1.warnings;
  r.warnings.insert(r.warnings.end(), result0.warnings.begin(), result0.warnings.end());
  const auto& d1 = result1.diagnostics;
  const auto& d0 = result0.diagnostics;
  r.diagnostics.across_iterations = d1.across_iterations + d0.across_iterations;
  r.diagnostics.within_iterations = d1.within_iterations;
  r.diagnostics.within_iterations.insert(r.diagnostics.within_iterations.end(), d0.within_iterations.begin(),
                                         d0.within_iterations.end());
  r.diagnostics.final_score_Y = std::max(std::abs(d1.final_score_Y), std::abs(d0.final_score_Y));
  r.diagnostics.final_score_X = std::max(std::abs(d1.final_score_X), std::abs(d0.final_score_X));
  r.diagnostics.converged = d1.converged && d0.converged;
  r.diagnostics.clipped_count = d1.clipped_count + d0.clipped_count;
  r.diagnostics.c_stop = std::min(d1.c_stop, d0.c_stop);
  if (result1.if_values.empty()) {
    r.no_inference = true;
    r.ci_lo = r.ci_hi = r.point;
    return r;
  }
  std::vector<double> diff(result1.if_values.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = result1.if_values[i] - result0.if_values[i];
  attach_inference(r, std::move(diff));
  return r;
}

EstimateResult estimate(const Dataset& data, const NuisanceSet& Q, EstimatorKind kind, const WeightSpec& spec, int x0,
                        const StoppingRule& rule) {
  const bool fixed = is_fixed_level(spec);
  const double z_star = fixed ? std::get<FixedLevel>(spec).z_star : 0.0;
  switch (kind) {
    case EstimatorKind::plugin:
      return estimate_plugin(data, Q, spec, x0);
    case EstimatorKind::esteq:
      return fixed ? estimate_esteq_discrete(data, Q, z_star, x0) : estimate_esteq_continuous(data, Q, spec, x0);
    case EstimatorKind::onestep:
      return fixed ? estimate_onestep_discrete(data, Q, z_star, x0) : estimate_onestep_continuous(data, Q, spec, x0);
    case EstimatorKind::tmle:
      return fixed ? tmle_discrete(data, Q, z_star, x0, rule) : tmle_continuous(data, Q, spec, x0, rule);
    case EstimatorKind::optimal:
      fail_validation("the optimal estimator runs over a list of levels; use estimate_optimal");
  }
  fail_validation("unknown estimator");
}

EstimateResult estimate_ate(const Dataset& data, const NuisanceSet& Q, EstimatorKind kind, const WeightSpec& spec,
                            const StoppingRule& rule) {
  const EstimateResult r1 = estimate(data, Q, kind, spec, 1, rule);
  const EstimateResult r0 = estimate(data, Q, kind, spec, 0, rule);
  return ate(r1, r0);
}

}  // namespace napkin
