#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "napkin/error.hpp"
#include "napkin/learners.hpp"
#include "napkin/nuisance.hpp"

#include <cmath>
#include <random>

using namespace napkin;

TEST_CASE("least squares recovers an exact linear relation") {
  Eigen::MatrixXd X(5, 2);
  X << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4;
  Eigen::VectorXd y = 2.0 + 0.5 * X.col(1).array();
  const LinearModel m = fit_least_squares(X, y);
  CHECK(m.coefficients(0) == doctest::Approx(2.0));
  CHECK(m.coefficients(1) == doctest::Approx(0.5));
  CHECK(m.residual_variance == doctest::Approx(0.0).epsilon(1e-20));
  CHECK_FALSE(m.ridge_applied);
}

TEST_CASE("rank-deficient least squares falls back to ridge") {
  Eigen::MatrixXd X(4, 3);
  X << 1, 1, 1, 1, 2, 2, 1, 3, 3, 1, 4, 4;
  const Eigen::VectorXd y = X.col(1);
  const LinearModel m = fit_least_squares(X, y);
  CHECK(m.ridge_applied);
  const double row[3] = {1, 5, 5};
  CHECK(m.predict(row) == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("logistic fit zeroes the score") {
  Rng rng(5);
  std::normal_distribution<double> normal;
  const int n = 400;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n), w(n), off(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = normal(rng);
    y(i) = std::bernoulli_distribution(expit(-0.3 + 0.8 * X(i, 1)))(rng) ? 1.0 : 0.0;
    w(i) = 0.5 + (i % 3);
    off(i) = 0.1 * (i % 5);
  }
  const LogisticModel m = fit_logistic_irls(X, y, &off, &w);
  CHECK(m.converged);
  CHECK(logistic_score_norm(X, y, m.coefficients, &off, &w) <= 1e-10);
}

TEST_CASE("separable data hits the coefficient cap without converging") {
  Eigen::MatrixXd X(4, 2);
  X << 1, -2, 1, -1, 1, 1, 1, 2;
  Eigen::VectorXd y(4);
  y << 0, 0, 1, 1;
  const LogisticModel m = fit_logistic_irls(X, y);
  CHECK_FALSE(m.converged);
  CHECK(m.coefficients.cwiseAbs().maxCoeff() <= 30.0 + 1e-12);
}

TEST_CASE("multinomial probabilities match category frequencies for an intercept model") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(10, 1);
  const std::vector<int> cat{0, 0, 1, 1, 1, 2, 2, 2, 2, 2};
  const MultinomialModel m = fit_multinomial(X, cat, 3);
  const double one = 1.0;
  const auto p = m.probabilities(&one);
  CHECK(p[0] == doctest::Approx(0.2).epsilon(1e-8));
  CHECK(p[1] == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(p[2] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("knn averages the nearest targets") {
  Eigen::MatrixXd F(5, 1);
  F << 0, 1, 2, 3, 10;
  const KnnIndex index(F, {0, 1, 2, 3, 10}, 2);
  const double q = 0.4;
  CHECK(index.mean_target(&q) == doctest::Approx(0.5));
  CHECK(index.fraction_equal(&q, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("saturated propensity fit equals cell frequencies") {
  // Four rows per (w, z) cell with 1, 2, 3 and 2 treated.
  const Dataset d = fixtures::one_covariate(
      {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1}, {0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 1, 1, 1, 1},
      {1, 0, 0, 0, 1, 1, 0, 0, 1, 1, 1, 0, 1, 0, 1, 0}, std::vector<double>(16, 1.0));
  NuisanceSpec spec;
  spec.pi.terms = {"z", "w", "z:w"};
  spec.fz.terms = {"w"};
  const NuisanceSet Q = fit_nuisance_set(d, spec);
  CHECK(Q.pi_raw(0.0, 0) == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(Q.pi_raw(1.0, 0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(Q.pi_raw(0.0, 8) == doctest::Approx(0.75).epsilon(1e-8));
  CHECK(Q.pi_raw(1.0, 8) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(Q.fz(1.0, 4) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(Q.group_count() == 2);
  CHECK(Q.group_weight(0) == doctest::Approx(0.5));
}

TEST_CASE("clipping bounds propensity and density") {
  const Dataset d = fixtures::one_covariate({0, 1}, {0, 1}, {0, 1}, {1, 2});
  const NuisanceSet Q = fixtures::hand_set(
      d, [](const Covariates&) { return 0.0; }, [](const Covariates&) { return 1.2; },
      [](const Covariates&) { return 0.0; }, 0.01);
  CHECK(Q.pi(1, 0.0, 0) == doctest::Approx(0.99));
  CHECK(Q.pi(0, 0.0, 0) == doctest::Approx(0.01));
  CHECK(Q.fz(0.0, 0) == doctest::Approx(0.01));
}

TEST_CASE("cross-fit rows use out-of-fold models") {
  const Dataset d = fixtures::random_dataset(8, 120, true);
  NuisanceSpec spec = fixtures::main_effects_spec(true);
  spec.cross_fit_folds = 3;
  const NuisanceSet Q = fit_nuisance_set(d, spec);
  CHECK(Q.fold_count() == 3);
  std::vector<int> counts(3, 0);
  for (std::size_t i = 0; i < d.n(); ++i) ++counts[Q.fold_of(i)];
  CHECK(counts == std::vector<int>{40, 40, 40});
  CHECK(assign_folds(120, 3, 7) == assign_folds(120, 3, 7));
}

TEST_CASE("conditional gaussian density integrates to one") {
  const Dataset d = fixtures::random_dataset(4, 200, false);
  LearnerSpec spec;
  spec.learner = LearnerKind::conditional_gaussian;
  const CondDensityModel m = fit_cond_density(d, [&] {
    std::vector<std::size_t> rows(d.n());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
  }(), spec, 1e-12);
  const double w[2] = {0.3, 1.0};
  double total = 0.0;
  const double h = 1e-3;
  for (double z = -8; z < 8; z += h) total += h * m.unclipped(Covariates{0, z, w, nullptr});
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("learner and role mismatches are rejected") {
  const Dataset d = fixtures::random_dataset(4, 50, true);
  NuisanceSpec spec = fixtures::main_effects_spec(true);
  spec.fz.learner = LearnerKind::conditional_gaussian;
  CHECK_THROWS_AS(fit_nuisance_set(d, spec), Error);
  spec = fixtures::main_effects_spec(true);
  spec.pi.terms = {"x"};
  CHECK_THROWS_AS(fit_nuisance_set(d, spec), Error);
  spec = fixtures::main_effects_spec(true);
  spec.mu.covariate_indices = std::vector<std::size_t>{5};
  CHECK_THROWS_AS(fit_nuisance_set(d, spec), Error);
}
