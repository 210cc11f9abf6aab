#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "napkin/error.hpp"
#include "napkin/simulation.hpp"
#include "napkin/study.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

using namespace napkin;

namespace {

double mean_of_col(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// |sample mean - expected| within k standard errors of the sample.
bool mean_matches(const std::vector<double>& v, double expected, double k = 4.0) {
  const double m = mean_of_col(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double se = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
  return std::abs(m - expected) <= k * se;
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

std::vector<double> column(const Dataset& d, std::function<double(std::size_t)> f) {
  std::vector<double> v(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) v[i] = f(i);
  return v;
}

// Ratio functional of the sim3 outcome and treatment models over W ~ U(-2.5, 3.5),
// by the composite midpoint rule.
double sim3_ratio(int x0) {
  const int m = 200000;
  const double lo = -2.5, hi = 3.5, h = (hi - lo) / m;
  double k1 = 0.0, k2 = 0.0;
  for (int j = 0; j < m; ++j) {
    const double w = lo + (j + 0.5) * h;
    const double p1 = (5.5 + w) / 10.0;
    const double p = x0 == 1 ? p1 : 1.0 - p1;
    k1 += (1.0 + w * x0) * p;
    k2 += p;
  }
  return k1 / k2;
}

}  // namespace

TEST_CASE("sim1 binary moments") {
  Rng rng(1);
  const Dataset d = sample_sim1(100000, ZMode::binary, rng);
  const auto w = column(d, [&](std::size_t i) { return d.w()(i, 0); });
  const auto z = column(d, [&](std::size_t i) { return d.z()[i]; });
  CHECK(mean_matches(w, 0.5));
  CHECK(mean_matches(z, 0.5 * (sigmoid(-1.0) + 0.5)));
  // E[P(X=1 | Z, W)] by enumeration of (W, Z).
  double px = 0.0, ey = 0.0;
  for (int wv : {0, 1}) {
    const double pz = sigmoid(-1.0 + wv);
    for (int zv : {0, 1}) {
      const double pzw = 0.5 * (zv ? pz : 1.0 - pz);
      const double p1 = (2.0 - wv + zv * wv) / 4.0;
      px += pzw * p1;
      for (int xv : {0, 1}) {
        const double mu = 4.0 + xv + zv / 2.0 - zv * wv / 2.0 - 1.5 * wv + (1 - wv) * (1 - xv) * (1 - zv);
        ey += pzw * (xv ? p1 : 1.0 - p1) * mu;
      }
    }
  }
  CHECK(mean_matches(column(d, [&](std::size_t i) { return static_cast<double>(d.x()[i]); }), px));
  CHECK(mean_matches(column(d, [&](std::size_t i) { return d.y()[i]; }), ey));
  CHECK(d.z_discrete());
  CHECK(d.z_levels() == std::vector<double>{0.0, 1.0});
}

TEST_CASE("sim1 continuous trapdoor support and mean") {
  Rng rng(2);
  const Dataset d = sample_sim1(100000, ZMode::continuous, rng);
  CHECK_FALSE(d.z_discrete());
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double upper = 0.25 * (1.0 + d.w()(i, 0));
    CHECK(d.z()[i] >= 0.1);
    CHECK(d.z()[i] <= upper);
  }
  CHECK(mean_matches(column(d, [&](std::size_t i) { return d.z()[i]; }), 0.5 * (0.175 + 0.3)));
  // Residual variance of Y around the outcome model is 0.1.
  const NuisanceSet Q = true_nuisances(Dgp::sim1_continuous, d);
  const auto r2 = column(d, [&](std::size_t i) {
    const double e = d.y()[i] - Q.mu(d.x()[i], d.z()[i], i);
    return e * e;
  });
  CHECK(mean_matches(r2, 0.1));
}

TEST_CASE("sim3 ranges of the trapdoor and treatment probabilities") {
  Rng rng(3);
  const Dataset d = sample_sim3(100000, rng);
  const NuisanceSet Q = true_nuisances(Dgp::sim3, d, 1e-6);
  double fmin = 1.0, fmax = 0.0, pmin = 1.0, pmax = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double w = d.w()(i, 0);
    CHECK(w >= -2.5);
    CHECK(w <= 3.5);
    const double f = Q.fz(1.0, i);
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
    for (double z : {0.0, 1.0}) {
      const double p = Q.pi(1, z, i);
      pmin = std::min(pmin, p);
      pmax = std::max(pmax, p);
    }
  }
  CHECK(fmin >= sigmoid(-5.0) - 1e-12);
  CHECK(fmin < 0.01);
  CHECK(fmax <= sigmoid(5.0) + 1e-12);
  CHECK(fmax > 0.99);
  CHECK(pmin >= 0.15 - 1e-12);
  CHECK(pmax <= 0.9 + 1e-12);
  CHECK(mean_matches(column(d, [&](std::size_t i) { return d.z()[i]; }),
                     [] {
                       double s = 0.0;
                       const int m = 100000;
                       for (int j = 0; j < m; ++j) s += sigmoid(-5.0 / 6.0 + 5.0 / 3.0 * (-2.5 + 6.0 * (j + 0.5) / m));
                       return s / m;
                     }()));
}

TEST_CASE("sim4 trapdoor model carries the indicator term") {
  Rng rng(4);
  const Dataset d = sample_sim4_binary(20000, rng);
  const NuisanceSet Q = true_nuisances(Dgp::sim4_binary, d, 1e-6);
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double w = d.w()(i, 0);
    const double expected = sigmoid(-1.0 + w + (w < 0.3 ? 0.4 * w * w : 0.0));
    CHECK(Q.fz(1.0, i) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("population truths match independent quadrature") {
  CHECK(population_truth(Dgp::sim1_binary) == doctest::Approx(4.5 - 3.5).epsilon(1e-14));
  CHECK(population_truth(Dgp::sim1_continuous) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(population_truth(Dgp::sim3) == doctest::Approx(sim3_ratio(1) - sim3_ratio(0)).epsilon(1e-8));
  CHECK(population_truth(Dgp::sim4_binary) == population_truth(Dgp::sim3));
  CHECK(population_truth(Dgp::sim3) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Monte Carlo truth oracles agree with the population truths") {
  Rng rng(11);
  for (auto dgp : {Dgp::sim1_binary, Dgp::sim1_continuous, Dgp::sim3}) {
    CHECK(std::abs(truth_oracle(dgp, 200000, rng) - population_truth(dgp)) <= 0.02);
  }
  CHECK(std::abs(truth_oracle(Dgp::confounded, 200000, rng) - 1.25) <= 0.02);
}

TEST_CASE("interventional ATE of the identity outcome is one") {
  Rng rng(5);
  CHECK(interventional_ate([](int x, Rng&) { return static_cast<double>(x); }, 1000, rng) == 1.0);
  CHECK_THROWS_AS(interventional_ate([](int x, Rng&) { return static_cast<double>(x); }, 0, rng), Error);
}

TEST_CASE("confounded sampler carries a binary C column") {
  Rng rng(6);
  const Dataset d = sample_confounded(5000, rng);
  REQUIRE(d.has_confounders());
  CHECK(d.names().c == std::vector<std::string>{"c"});
  CHECK(mean_matches(column(d, [&](std::size_t i) { return d.c()(i, 0); }), 0.5));
  CHECK_THROWS_AS(true_nuisances(Dgp::confounded, d), Error);
}

TEST_CASE("seed mixing is deterministic and spreads indices") {
  CHECK(mix_seed(1, 0) == mix_seed(1, 0));
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
  Rng a(mix_seed(7, 3)), b(mix_seed(7, 3));
  const Dataset da = sample(Dgp::sim3, 50, a);
  const Dataset db = sample(Dgp::sim3, 50, b);
  CHECK(da.y() == db.y());
}

TEST_CASE("study summaries satisfy the bias-variance identity") {
  Scenario s = default_scenario("sim1_binary");
  s.n = 300;
  s.reps = 20;
  s.seed = 3;
  const StudyReport rep = run_study(s);
  CHECK(rep.truth == population_truth(Dgp::sim1_binary));
  for (const auto& c : rep.cells) {
    REQUIRE(c.completed + c.excluded == s.reps);
    const double m = static_cast<double>(c.completed);
    CHECK(c.mse == doctest::Approx(c.bias * c.bias + c.sd * c.sd * (m - 1.0) / m).epsilon(1e-10));
    CHECK(c.bias == doctest::Approx(c.mean - rep.truth).epsilon(1e-12));
    CHECK(c.coverage >= 0.0);
    CHECK(c.coverage <= 1.0);
    CHECK(c.points.size() == c.completed);
  }
}

TEST_CASE("single replicate conventions") {
  Scenario s = default_scenario("sim3");
  s.n = 200;
  s.reps = 1;
  const StudyReport rep = run_study(s);
  for (const auto& c : rep.cells) {
    if (c.completed != 1) continue;
    CHECK(c.sd == 0.0);
    CHECK(c.median == c.mean);
    CHECK(c.mse == doctest::Approx(c.bias * c.bias));
  }
}

TEST_CASE("study reports do not depend on the thread count") {
  Scenario s = default_scenario("sim1_continuous");
  s.n = 200;
  s.reps = 12;
  s.seed = 9;
  const std::string one = report_json(run_study(s, 1), true);
  CHECK(report_json(run_study(s, 2), true) == one);
  CHECK(report_json(run_study(s, 5), true) == one);
}

TEST_CASE("scenario validation") {
  for (const auto& id : scenario_ids()) CHECK_NOTHROW(check_scenario(default_scenario(id)));
  CHECK_THROWS_AS(default_scenario("nope"), Error);
  Scenario s = default_scenario("sim3");
  s.reps = 0;
  CHECK_THROWS_AS(check_scenario(s), Error);
  s = default_scenario("sim3");
  s.n = 10;
  CHECK_THROWS_AS(check_scenario(s), Error);
}
