#include "napkin/verma.hpp"

#include "napkin/error.hpp"
#include "napkin/identification.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace napkin {

namespace {

void check_lengths(const std::vector<std::vector<double>>& ifs) {
  if (ifs.size() < 2) fail_validation("optimal weighting needs at least two influence vectors");
  const std::size_t n = ifs.front().size();
  if (n < 2) fail_validation("optimal weighting needs at least two observations");
  for (const auto& v : ifs) {
    if (v.size() != n) fail_validation("influence vectors must have equal length");
  }
}

}  // namespace

AlphaSolution optimal_alpha_binary(const std::vector<double>& if0, const std::vector<double>& if1) {
  check_lengths({if0, if1});
  const double n = static_cast<double>(if0.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < if0.size(); ++i) {
    const double d = if0[i] - if1[i];
    num += if0[i] * d;
    den += d * d;
  }
  num /= n;
  den /= n;
  if (den < 1e-12) fail_degenerate("per-level influence functions are identical; alpha is not identified");
  AlphaSolution s;
  s.alpha = Eigen::VectorXd::Constant(1, num / den);
  return s;
}

AlphaSolution optimal_alpha_multi(const std::vector<std::vector<double>>& ifs) {
  check_lengths(ifs);
  const std::size_t K = ifs.size();
  const std::size_t n = ifs.front().size();
  const auto m = static_cast<Eigen::Index>(K - 1);
  const auto& last = ifs.back();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd v(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < m; ++a) v(a) = ifs[static_cast<std::size_t>(a)][i] - last[i];
    H.noalias() += v * v.transpose();
    b += v * last[i];
  }
  H /= static_cast<double>(n);
  b /= static_cast<double>(n);

  AlphaSolution s;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  s.hessian_condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  Eigen::MatrixXd system = H;
  if (!(s.hessian_condition <= 1e10)) {
    const double ridge = 1e-8 * H.trace() / static_cast<double>(m);
    if (!(ridge > 0.0)) fail_degenerate("influence differences are all zero; alpha is not identified");
    system.diagonal().array() += ridge;
    s.regularized = true;
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) fail_degenerate("singular optimal-weight system");
  s.alpha = ldlt.solve(-b);
  if (!s.alpha.allFinite()) fail_degenerate("singular optimal-weight system");
  return s;
}

double weighted_second_moment(const std::vector<std::vector<double>>& ifs, const Eigen::VectorXd& alpha) {
  check_lengths(ifs);
  const std::size_t n = ifs.front().size();
  const double rest = 1.0 - alpha.sum();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = rest * ifs.back()[i];
    for (Eigen::Index a = 0; a < alpha.size(); ++a) v += alpha(a) * ifs[static_cast<std::size_t>(a)][i];
    total += v * v;
  }
  return total / static_cast<double>(n);
}

EstimateResult combine_optimal(const std::vector<EstimateResult>& per_level) {
  if (per_level.size() < 2) fail_validation("optimal weighting needs at least two levels");
  std::vector<std::vector<double>> ifs;
  for (const auto& r : per_level) {
    if (r.if_values.empty()) fail_validation("optimal weighting needs influence values (not the plug-in)");
    ifs.push_back(r.if_values);
  }
  const AlphaSolution s = optimal_alpha_multi(ifs);
  const double rest = 1.0 - s.alpha.sum();
  EstimateResult r;
  r.estimand = per_level.front().estimand;
  r.x0 = per_level.front().x0;
  r.kind = EstimatorKind::optimal;
  std::ostringstream label;
  label << "optimal(" << to_string(per_level.front().kind) << ":";
  std::vector<double> combined(ifs.front().size(), 0.0);
  r.point = 0.0;
  for (std::size_t k = 0; k < per_level.size(); ++k) {
    const double a = k + 1 < per_level.size() ? s.alpha(static_cast<Eigen::Index>(k)) : rest;
    r.alpha.push_back(a);
    r.point += a * per_level[k].point;
    for (std::size_t i = 0; i < combined.size(); ++i) combined[i] += a * per_level[k].if_values[i];
    label << (k ? "," : "") << per_level[k].weight;
    const auto& d = per_level[k].diagnostics;
    r.diagnostics.across_iterations += d.across_iterations;
    r.diagnostics.within_iterations.insert(r.diagnostics.within_iterations.end(), d.within_iterations.begin(),
                                           d.within_iterations.end());
    r.diagnostics.final_score_Y = std::max(r.diagnostics.final_score_Y, std::abs(d.final_score_Y));
    r.diagnostics.final_score_X = std::max(r.diagnostics.final_score_X, std::abs(d.final_score_X));
    r.diagnostics.converged = r.diagnostics.converged && d.converged;
    r.diagnostics.clipped_count += d.clipped_count;
    r.diagnostics.c_stop = k == 0 ? d.c_stop : std::min(r.diagnostics.c_stop, d.c_stop);
    r.warnings.insert(r.warnings.end(), per_level[k].warnings.begin(), per_level[k].warnings.end());
  }
  label << ")";
  r.weight = label.str();
  if (s.regularized) r.warnings.push_back("optimal-weight system was ridge regularized");
  attach_inference(r, std::move(combined));
  return r;
}

EstimateResult estimate_optimal(const Dataset& data, const NuisanceSet& Q, int x0, EstimatorKind kind,
                                const std::vector<double>& levels, const StoppingRule& rule) {
  if (!data.z_discrete()) fail_validation("optimal level weighting requires discrete Z");
  if (kind == EstimatorKind::optimal || kind == EstimatorKind::plugin) {
    fail_validation("optimal weighting needs an esteq, onestep or tmle base estimator");
  }
  std::vector<EstimateResult> per_level;
  for (double z : levels) per_level.push_back(estimate(data, Q, kind, FixedLevel{z}, x0, rule));
  return combine_optimal(per_level);
}

EstimateResult estimate_optimal_ate(const Dataset& data, const NuisanceSet& Q, EstimatorKind kind,
                                    const std::vector<double>& levels, const StoppingRule& rule) {
  if (!data.z_discrete()) fail_validation("optimal level weighting requires discrete Z");
  if (kind == EstimatorKind::optimal || kind == EstimatorKind::plugin) {
    fail_validation("optimal weighting needs an esteq, onestep or tmle base estimator");
  }
  std::vector<EstimateResult> per_level;
  for (double z : levels) per_level.push_back(estimate_ate(data, Q, kind, FixedLevel{z}, rule));
  return combine_optimal(per_level);
}

VermaReport verma_diagnostic(const Dataset& data, const NuisanceSet& Q, int x0, const std::vector<WeightSpec>& probes,
                             EstimatorKind kind, const StoppingRule& rule) {
  if (probes.size() < 2) fail_validation("the invariance diagnostic needs at least two probes");
  if (kind == EstimatorKind::optimal) fail_validation("the invariance diagnostic takes a single-level estimator");
  VermaReport report;
  std::vector<std::vector<double>> ifs;
  for (const auto& spec : probes) {
    VermaProbe probe;
    probe.label = describe(spec);
    if (kind == EstimatorKind::plugin) {
      validate_weightspec(spec, data);
      const Target target = make_target(data, Q, spec, x0);
      probe.psi = psi_on_target(target);
      EstimateResult tmp;
      tmp.point = probe.psi;
      attach_inference(tmp, influence_on_target(data, target).phi);
      probe.se = tmp.se;
      ifs.push_back(std::move(tmp.if_values));
    } else {
      EstimateResult r = estimate(data, Q, kind, spec, x0, rule);
      probe.psi = r.point;
      probe.se = r.se;
      ifs.push_back(std::move(r.if_values));
    }
    report.probes.push_back(std::move(probe));
  }
  const double root_n = std::sqrt(static_cast<double>(data.n()));
  report.max_standardized_difference = -1.0;
  for (std::size_t a = 0; a < probes.size(); ++a) {
    for (std::size_t b = a + 1; b < probes.size(); ++b) {
      std::vector<double> diff(ifs[a].size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = ifs[a][i] - ifs[b][i];
      const double gap = std::abs(report.probes[a].psi - report.probes[b].psi);
      const double scale = sd_of(diff) / root_n;
      double stat = 0.0;
      if (scale > 0.0) {
        stat = gap / scale;
      } else if (gap > 0.0) {
        stat = std::numeric_limits<double>::infinity();
      }
      if (stat > report.max_standardized_difference) {
        report.max_standardized_difference = stat;
        report.first = a;
        report.second = b;
      }
    }
  }
  return report;
}

std::vector<EstimateResult> compare_weight_specs(const Dataset& data, const NuisanceSet& Q, EstimatorKind kind,
                                                 const std::vector<WeightSpec>& candidates, const StoppingRule& rule) {
  std::vector<EstimateResult> out;
  for (const auto& spec : candidates) out.push_back(estimate_ate(data, Q, kind, spec, rule));
  return out;
}

}  // namespace napkin
