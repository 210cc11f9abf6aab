#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "napkin/error.hpp"
#include "napkin/estimators.hpp"
#include "napkin/identification.hpp"

#include <cmath>

using namespace napkin;

namespace {

Dataset with_binary_outcome(const Dataset& d) {
  std::vector<double> y(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) y[i] = d.y()[i] > 0.0 ? 1.0 : 0.0;
  return Dataset(d.w(), d.z(), d.x(), std::move(y), d.c(),
                 d.z_discrete() ? ZKindRequest::discrete : ZKindRequest::continuous, 10, d.names());
}


bool same_grid(const NuisanceGrid& a, const NuisanceGrid& b) {
  return a.mu.rows() == b.mu.rows() && a.mu.cols() == b.mu.cols() && (a.mu.array() == b.mu.array()).all() &&
         (a.pi.array() == b.pi.array()).all() && (a.fz.array() == b.fz.array()).all();
}

// Central difference of a loss along a one-step fluctuation of the target grid.
template <class Loss>
double directional_derivative(const Target& base, bool binary, double clip, FluctuationStep step, Loss loss) {
  const double h = 1e-5;
  auto at = [&](double eps) {
    FluctuationState state(base.grid, binary, clip);
    step.epsilon = eps;
    state.push(step);
    Target t = base;
    t.grid = state.current();
    return loss(t);
  };
  return (at(h) - at(-h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("estimating equation solves the centered influence equation") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto fd = fixtures::random_fixture(seed, 200, true);
    for (int x0 : {0, 1}) {
      const auto r = estimate_esteq_discrete(fd.data, fd.Q, 1.0, x0);
      const auto phi = influence_discrete(fd.data, fd.Q, 1.0, x0, InfluenceOptions{r.point, std::nullopt});
      CHECK(std::abs(mean_of(phi.phi)) <= 1e-8);
    }
    const auto fc = fixtures::random_fixture(seed, 200, false);
    for (int x0 : {0, 1}) {
      const auto r = estimate_esteq_continuous(fc.data, fc.Q, fixtures::central_window(fc.data), x0);
      const auto phi = influence_continuous(fc.data, fc.Q, fixtures::central_window(fc.data), x0, InfluenceOptions{r.point, std::nullopt});
      CHECK(std::abs(mean_of(phi.phi)) <= 1e-8);
    }
  }
}

TEST_CASE("one-step adds the mean influence to the plug-in") {
  const auto f = fixtures::random_fixture(4, 200, false);
  const auto r = estimate_onestep_continuous(f.data, f.Q, fixtures::central_window(f.data), 1);
  const auto phi = influence_continuous(f.data, f.Q, fixtures::central_window(f.data), 1);
  CHECK(r.point == doctest::Approx(psi_plugin_weighted(f.Q, fixtures::central_window(f.data), 1) + mean_of(phi.phi)).epsilon(1e-12));
  const auto d = fixtures::random_fixture(4, 200, true);
  const auto p = estimate_onestep_discrete(d.data, d.Q, 0.0, 1, Kappa2Form::plugin);
  CHECK(p.point ==
        doctest::Approx(psi_plugin_at(d.Q, 0.0, 1) + mean_of(influence_discrete(d.data, d.Q, 0.0, 1).phi)).epsilon(1e-12));
}

TEST_CASE("TMLE solves both score equations below the threshold") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (bool discrete : {true, false}) {
      const auto f = fixtures::random_fixture(seed, 200, discrete);
      for (const bool binary : {false, true}) {
        const Dataset data = binary ? with_binary_outcome(f.data) : f.data;
        const NuisanceSet Q = fit_nuisance_set(data, fixtures::main_effects_spec(discrete));
        const WeightSpec spec = discrete ? WeightSpec{FixedLevel{1.0}} : fixtures::central_window(data);
        const auto run = run_tmle(data, Q, spec, 1, discrete ? TmleForm::discrete : TmleForm::continuous, {});
        const auto& d = run.result.diagnostics;
        CHECK(d.converged);
        CHECK(std::abs(d.final_score_Y) <= d.c_stop);
        CHECK(std::abs(d.final_score_X) <= d.c_stop);
        const auto final_phi = influence_on_target(data, Target{run.final_grid, run.initial.weights});
        CHECK(std::abs(mean_of(final_phi.phi_Y)) <= d.c_stop);
        CHECK(std::abs(mean_of(final_phi.phi_X)) <= d.c_stop);
      }
    }
  }
}

TEST_CASE("discrete TMLE makes at most one across pass") {
  const auto f = fixtures::random_fixture(5, 200, true);
  const auto r = tmle_discrete(f.data, f.Q, 0.0, 1);
  CHECK(r.diagnostics.across_iterations <= 1);
}

TEST_CASE("replaying the fluctuation path reproduces the final grid exactly") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    for (bool discrete : {true, false}) {
      const auto f = fixtures::random_fixture(seed, 200, discrete);
      const WeightSpec spec = discrete ? WeightSpec{FixedLevel{0.0}} : fixtures::central_window(f.data);
      const auto run = run_tmle(f.data, f.Q, spec, 0, discrete ? TmleForm::discrete : TmleForm::continuous, {});
      FluctuationState state(run.initial.grid, f.data.y_binary(), f.Q.clip_epsilon());
      for (const auto& step : run.path) state.push(step);
      CHECK(same_grid(state.current(), run.final_grid));
      CHECK(same_grid(state.replay(), run.final_grid));
      CHECK(psi_on_target(Target{state.replay(), run.initial.weights}) == run.result.point);
    }
  }
}

TEST_CASE("loss derivatives along the submodels equal the scores") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    for (bool discrete : {true, false}) {
      const auto f = fixtures::random_fixture(seed, 200, discrete);
      for (const bool binary : {false, true}) {
        const Dataset data = binary ? with_binary_outcome(f.data) : f.data;
        NuisanceSpec nspec = fixtures::main_effects_spec(discrete);
        // A logistic outcome model keeps mu inside the clamp so the submodel passes through it.
        if (binary) nspec.mu.learner = LearnerKind::logistic;
        const NuisanceSet Q = fit_nuisance_set(data, nspec);
        const WeightSpec spec = discrete ? WeightSpec{FixedLevel{1.0}} : fixtures::central_window(data);
        const TmleForm form = discrete ? TmleForm::discrete : TmleForm::continuous;
        const Target target = make_target(data, Q, spec, 1);
        const auto phi = influence_on_target(data, target);
        // The discrete clever covariates omit kappa2, which rescales both scores.
        const double scale = discrete ? target.grid.kappa2(0) : 1.0;

        FluctuationStep pi_step{FluctuationStep::Nuisance::pi, 0.0, clever_covariate_pi(target, form)};
        const double dpi = directional_derivative(target, binary, Q.clip_epsilon(), pi_step,
                                                  [&](const Target& t) { return loss_pi(data, t, form); });
        CHECK(dpi == doctest::Approx(-scale * mean_of(phi.phi_X)).epsilon(1e-5).scale(1e-3));

        FluctuationStep mu_step{FluctuationStep::Nuisance::mu, 0.0, Eigen::MatrixXd()};
        if (binary && form == TmleForm::continuous) mu_step.covariate = clever_covariate_mu(target, form);
        const double dmu = directional_derivative(target, binary, Q.clip_epsilon(), mu_step,
                                                  [&](const Target& t) { return loss_mu(data, t, form, binary); });
        // The binary loss clamps mu at 1e-3; the identity holds where no clamp is active.
        const bool clamped = binary && (target.grid.mu.minCoeff() < 1e-3 || target.grid.mu.maxCoeff() > 1.0 - 1e-3);
        if (clamped) continue;
        const double factor = binary ? -1.0 : -2.0;
        INFO("seed " << seed << " discrete " << discrete << " binary " << binary);
        CHECK(dmu == doctest::Approx(factor * scale * mean_of(phi.phi_Y)).epsilon(1e-5).scale(1e-3));
      }
    }
  }
}

TEST_CASE("estimators agree with the truth under the analytic nuisances") {
  const std::size_t n = 20000;
  Rng rng(77);
  const Dataset d = sample_sim1(n, ZMode::binary, rng);
  const NuisanceSet Q = true_nuisances(Dgp::sim1_binary, d);
  const double truth = population_truth(Dgp::sim1_binary);
  for (auto kind : {EstimatorKind::esteq, EstimatorKind::onestep, EstimatorKind::tmle}) {
    for (double z : {0.0, 1.0}) {
      const auto r = estimate_ate(d, Q, kind, FixedLevel{z});
      CHECK(std::abs(r.point - truth) <= 5.0 * r.se);
      CHECK(r.se > 0.0);
      CHECK(r.se < 5.0 / std::sqrt(static_cast<double>(n)));
    }
  }
  const Dataset dc = sample_sim1(n, ZMode::continuous, rng);
  const NuisanceSet Qc = true_nuisances(Dgp::sim1_continuous, dc);
  for (auto kind : {EstimatorKind::esteq, EstimatorKind::onestep, EstimatorKind::tmle}) {
    const auto r = estimate_ate(dc, Qc, kind, Density::uniform(0.1, 0.25));
    CHECK(std::abs(r.point - truth) <= 5.0 * r.se);
  }
}

TEST_CASE("ATE is the difference of the per-level results") {
  const auto f = fixtures::random_fixture(9, 200, true);
  for (auto kind : {EstimatorKind::esteq, EstimatorKind::onestep, EstimatorKind::tmle}) {
    const auto r1 = estimate(f.data, f.Q, kind, FixedLevel{1.0}, 1);
    const auto r0 = estimate(f.data, f.Q, kind, FixedLevel{1.0}, 0);
    const auto a = estimate_ate(f.data, f.Q, kind, FixedLevel{1.0});
    CHECK(a.estimand == Estimand::ate);
    CHECK(a.point == r1.point - r0.point);
    REQUIRE(a.if_values.size() == f.data.n());
    double ss = 0.0;
    for (std::size_t i = 0; i < f.data.n(); ++i) {
      const double diff = r1.if_values[i] - r0.if_values[i];
      CHECK(a.if_values[i] == doctest::Approx(diff).epsilon(1e-12).scale(1e-12));
      ss += diff * diff;
    }
    const double nn = static_cast<double>(f.data.n());
    CHECK(a.se == doctest::Approx(std::sqrt(ss / nn) / std::sqrt(nn)).epsilon(1e-10));
    CHECK(a.ci_hi - a.ci_lo == doctest::Approx(2.0 * wald_quantile * a.se));
  }
}

TEST_CASE("plug-in reports no inference") {
  const auto f = fixtures::random_fixture(2, 100, true);
  const auto r = estimate_plugin(f.data, f.Q, FixedLevel{0.0}, 1);
  CHECK(r.no_inference);
  CHECK(r.if_values.empty());
  CHECK(r.ci_lo == r.point);
  CHECK(r.ci_hi == r.point);
  CHECK(estimate_ate(f.data, f.Q, EstimatorKind::plugin, FixedLevel{0.0}).no_inference);
}

TEST_CASE("targeting parameters are validated") {
  const auto f = fixtures::random_fixture(2, 100, true);
  StoppingRule bad;
  bad.c_stop = 0.0;
  CHECK_THROWS_AS(tmle_discrete(f.data, f.Q, 0.0, 1, bad), Error);
  StoppingRule caps;
  caps.max_within = 0;
  CHECK_THROWS_AS(tmle_discrete(f.data, f.Q, 0.0, 1, caps), Error);
  CHECK_THROWS_AS(estimate(f.data, f.Q, EstimatorKind::optimal, FixedLevel{0.0}, 1), Error);
  CHECK_THROWS_AS(estimate(f.data, f.Q, EstimatorKind::tmle, FixedLevel{0.0}, 2), Error);
  CHECK_THROWS_AS(parse_estimator_kind("bogus"), Error);
}

TEST_CASE("default stopping threshold scales as sd over root n log n") {
  std::vector<double> phi{-1.0, 1.0, -1.0, 1.0};
  CHECK(default_c_stop(phi) == doctest::Approx(1.0 / (2.0 * std::log(4.0))));
}
