#include "napkin/error.hpp"
#include "napkin/estimators.hpp"
#include "napkin/identification.hpp"
#include "napkin/learners.hpp"

#include <algorithm>
#include <cmath>

namespace napkin {

namespace {

constexpr double outcome_clip = 1e-3;

double logit(double p) { return std::log(p / (1.0 - p)); }

double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

struct Scores {
  double y = 0.0;
  double x = 0.0;
};

Scores score_means(const Dataset& data, const Target& target) {
  const auto inf = influence_on_target(data, target);
  return {mean_of(inf.phi_Y), mean_of(inf.phi_X)};
}

// Observation-level arrays for a one-dimensional offset logistic fit.
struct FluctuationFit {
  Eigen::MatrixXd covariate;
  Eigen::VectorXd response;
  Eigen::VectorXd offset;
  Eigen::VectorXd weight;
};

double solve_epsilon(FluctuationFit& fit) {
  if (fit.response.size() == 0) return 0.0;
  const auto model = fit_logistic_irls(fit.covariate, fit.response, &fit.offset, &fit.weight);
  return model.coefficients(0);
}

}  // namespace

FluctuationState::FluctuationState(NuisanceGrid initial, bool binary_outcome, double clip_epsilon)
    : initial_(std::move(initial)), current_(initial_), binary_outcome_(binary_outcome), clip_(clip_epsilon) {}

std::size_t FluctuationState::apply(NuisanceGrid& grid, const FluctuationStep& step, bool binary_outcome,
                                    double clip) {
  const bool constant = step.covariate.size() == 0;
  auto h = [&](Eigen::Index k, Eigen::Index g) { return constant ? 1.0 : step.covariate(k, g); };
  std::size_t clipped = 0;
  if (step.nuisance == FluctuationStep::Nuisance::pi) {
    for (Eigen::Index g = 0; g < grid.pi.cols(); ++g) {
      for (Eigen::Index k = 0; k < grid.pi.rows(); ++k) {
        const double p = expit(logit(grid.pi(k, g)) + step.epsilon * h(k, g));
        const double q = std::clamp(p, clip, 1.0 - clip);
        if (q != p) ++clipped;
        grid.pi(k, g) = q;
      }
    }
    return clipped;
  }
  for (Eigen::Index g = 0; g < grid.mu.cols(); ++g) {
    for (Eigen::Index k = 0; k < grid.mu.rows(); ++k) {
      if (binary_outcome) {
        const double m = std::clamp(grid.mu(k, g), outcome_clip, 1.0 - outcome_clip);
        grid.mu(k, g) = expit(logit(m) + step.epsilon * h(k, g));
      } else {
        grid.mu(k, g) += step.epsilon * h(k, g);
      }
    }
  }
  return clipped;
}

void FluctuationState::push(FluctuationStep step) {
  clipped_ += apply(current_, step, binary_outcome_, clip_);
  path_.push_back(std::move(step));
}

NuisanceGrid FluctuationState::replay() const {
  NuisanceGrid grid = initial_;
  for (const auto& step : path_) apply(grid, step, binary_outcome_, clip_);
  return grid;
}

Eigen::MatrixXd clever_covariate_pi(const Target& target, TmleForm form) {
  const auto& grid = target.grid;
  const std::vector<double> psi = psi_by_row(grid);
  Eigen::MatrixXd H(grid.mu.rows(), grid.mu.cols());
  for (Eigen::Index k = 0; k < H.rows(); ++k) {
    const auto row = static_cast<std::size_t>(k);
    const double scale = form == TmleForm::continuous ? 1.0 / grid.kappa2(row) : 1.0;
    for (Eigen::Index g = 0; g < H.cols(); ++g) H(k, g) = (grid.mu(k, g) - psi[row]) * scale;
  }
  return H;
}

Eigen::MatrixXd clever_covariate_mu(const Target& target, TmleForm form) {
  const auto& grid = target.grid;
  Eigen::MatrixXd H(grid.mu.rows(), grid.mu.cols());
  for (Eigen::Index k = 0; k < H.rows(); ++k) {
    const auto row = static_cast<std::size_t>(k);
    const double scale = form == TmleForm::continuous ? grid.kappa2(row) : 1.0;
    for (Eigen::Index g = 0; g < H.cols(); ++g) {
      H(k, g) = target.weights.row_weight[row] / (scale * grid.fz(k, g));
    }
  }
  return H;
}

double loss_pi(const Dataset& data, const Target& target, TmleForm) {
  const auto& grid = target.grid;
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const std::size_t row = target.weights.obs_row[i];
    if (row == no_row) continue;
    const auto r = static_cast<Eigen::Index>(row);
    const auto g = static_cast<Eigen::Index>(grid.obs_group[i]);
    const double w = target.weights.obs_weight[i] / grid.fz(r, g);
    const double p = grid.pi(r, g);
    total -= w * (data.x()[i] == grid.x0 ? std::log(p) : std::log(1.0 - p));
  }
  return total / static_cast<double>(data.n());
}

double loss_mu(const Dataset& data, const Target& target, TmleForm form, bool binary_outcome) {
  const auto& grid = target.grid;
  const Eigen::MatrixXd H = clever_covariate_mu(target, form);
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const std::size_t row = target.weights.obs_row[i];
    if (row == no_row || data.x()[i] != grid.x0) continue;
    const auto r = static_cast<Eigen::Index>(row);
    const auto g = static_cast<Eigen::Index>(grid.obs_group[i]);
    const double y = data.y()[i];
    const double m = grid.mu(r, g);
    if (!binary_outcome) {
      total += H(r, g) * (y - m) * (y - m);
    } else {
      const double w = form == TmleForm::discrete ? H(r, g) : 1.0;
      const double mc = std::clamp(m, outcome_clip, 1.0 - outcome_clip);
      total -= w * (y * std::log(mc) + (1.0 - y) * std::log(1.0 - mc));
    }
  }
  return total / static_cast<double>(data.n());
}

TmleRun run_tmle(const Dataset& data, const NuisanceSet& Q, const WeightSpec& spec, int x0, TmleForm form,
                 const StoppingRule& rule) {
  check_treatment_level(x0);
  check_stopping_rule(rule);
  if (form == TmleForm::discrete && !is_fixed_level(spec)) fail_validation("discrete TMLE needs a fixed level");
  EstimateResult result;
  result.kind = EstimatorKind::tmle;
  result.x0 = x0;
  result.weight = describe(spec);
  result.warnings = validate_weightspec(spec, data);

  TmleRun run;
  run.initial = make_target(data, Q, spec, x0);
  const bool binary = data.y_binary();
  const auto initial_phi = influence_on_target(data, run.initial);
  const double c_stop = rule.c_stop ? *rule.c_stop : default_c_stop(initial_phi.phi);
  auto& diag = result.diagnostics;
  diag.c_stop = c_stop;

  FluctuationState state(run.initial.grid, binary, Q.clip_epsilon());
  Target work = run.initial;
  const auto& tw = work.weights;
  auto push = [&](FluctuationStep step) {
    state.push(std::move(step));
    work.grid = state.current();
  };

  auto pi_step = [&]() {
    const Eigen::MatrixXd H = clever_covariate_pi(work, form);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (tw.obs_row[i] != no_row && tw.obs_weight[i] > 0.0) rows.push_back(i);
    }
    FluctuationFit fit;
    const auto m = static_cast<Eigen::Index>(rows.size());
    fit.covariate.resize(m, 1);
    fit.response.resize(m);
    fit.offset.resize(m);
    fit.weight.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::size_t i = rows[static_cast<std::size_t>(j)];
      const auto r = static_cast<Eigen::Index>(tw.obs_row[i]);
      const auto g = static_cast<Eigen::Index>(work.grid.obs_group[i]);
      fit.covariate(j, 0) = H(r, g);
      fit.response(j) = data.x()[i] == x0 ? 1.0 : 0.0;
      fit.offset(j) = logit(work.grid.pi(r, g));
      fit.weight(j) = tw.obs_weight[i] / work.grid.fz(r, g);
    }
    push(FluctuationStep{FluctuationStep::Nuisance::pi, solve_epsilon(fit), H});
  };

  auto within_loop = [&]() {
    int within = 0;
    while (within < rule.max_within) {
      if (std::abs(score_means(data, work).x) <= c_stop) break;
      pi_step();
      ++within;
    }
    diag.within_iterations.push_back(within);
  };

  auto mu_step = [&]() {
    const Eigen::MatrixXd H = clever_covariate_mu(work, form);
    double num = 0.0;
    double den = 0.0;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (tw.obs_row[i] == no_row || data.x()[i] != x0) continue;
      const auto r = static_cast<Eigen::Index>(tw.obs_row[i]);
      const auto g = static_cast<Eigen::Index>(work.grid.obs_group[i]);
      const double h = H(r, g);
      if (!(h > 0.0)) continue;
      rows.push_back(i);
      num += h * (data.y()[i] - work.grid.mu(r, g));
      den += h;
    }
    if (rows.empty() || !(den > 0.0)) fail_degenerate("no treated observations inside the weight support");
    if (!binary) {
      push(FluctuationStep{FluctuationStep::Nuisance::mu, num / den, Eigen::MatrixXd()});
      return;
    }
    FluctuationFit fit;
    const auto m = static_cast<Eigen::Index>(rows.size());
    fit.covariate.resize(m, 1);
    fit.response.resize(m);
    fit.offset.resize(m);
    fit.weight.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::size_t i = rows[static_cast<std::size_t>(j)];
      const auto r = static_cast<Eigen::Index>(tw.obs_row[i]);
      const auto g = static_cast<Eigen::Index>(work.grid.obs_group[i]);
      const double mc = std::clamp(work.grid.mu(r, g), outcome_clip, 1.0 - outcome_clip);
      fit.response(j) = data.y()[i];
      fit.offset(j) = logit(mc);
      if (form == TmleForm::continuous) {
        fit.covariate(j, 0) = H(r, g);
        fit.weight(j) = 1.0;
      } else {
        fit.covariate(j, 0) = 1.0;
        fit.weight(j) = H(r, g);
      }
    }
    const double eps = solve_epsilon(fit);
    push(FluctuationStep{FluctuationStep::Nuisance::mu, eps,
                         form == TmleForm::continuous ? H : Eigen::MatrixXd()});
  };

  auto satisfied = [&](const Scores& s) { return std::abs(s.y) <= c_stop && std::abs(s.x) <= c_stop; };

  if (form == TmleForm::discrete) {
    if (!satisfied(score_means(data, work))) {
      diag.across_iterations = 1;
      mu_step();
      within_loop();
    }
  } else {
    for (int across = 0; across < rule.max_across; ++across) {
      if (satisfied(score_means(data, work))) break;
      ++diag.across_iterations;
      within_loop();
      mu_step();
    }
  }

  const auto final_phi = influence_on_target(data, work);
  diag.final_score_Y = mean_of(final_phi.phi_Y);
  diag.final_score_X = mean_of(final_phi.phi_X);
  diag.converged = std::abs(diag.final_score_Y) <= c_stop && std::abs(diag.final_score_X) <= c_stop;
  diag.clipped_count = run.initial.grid.clipped_count + state.clipped_count();
  result.point = psi_on_target(work);
  attach_inference(result, final_phi.phi);
  if (!diag.converged) result.warnings.push_back("targeting did not reach the stopping threshold");

  run.result = std::move(result);
  run.path = state.path();
  run.final_grid = work.grid;
  return run;
}

}  // namespace napkin
