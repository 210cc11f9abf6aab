#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "napkin/error.hpp"
#include "napkin/grid.hpp"
#include "napkin/identification.hpp"

#include <cmath>
#include <map>

using namespace napkin;

namespace {

double sim1_mu(double x, double z, double w) {
  return 4.0 + x + z / 2.0 - z * w / 2.0 - 1.5 * w + (1.0 - w) * (1.0 - x) * (1.0 - z);
}
double sim1_pi(double z, double w) { return (2.0 - w + z * w) / 4.0; }

// Dataset whose empirical W law is exactly Bernoulli(0.5).
Dataset balanced_sim1(std::size_t pairs) {
  std::vector<double> w, z, y;
  std::vector<int> x;
  for (std::size_t i = 0; i < pairs; ++i) {
    for (double wv : {0.0, 1.0}) {
      w.push_back(wv);
      z.push_back(static_cast<double>(i % 2));
      x.push_back(static_cast<int>((i / 2) % 2));
      y.push_back(4.0);
    }
  }
  return fixtures::one_covariate(w, z, x, y);
}

struct Tables {
  std::map<std::pair<double, double>, double> mu1, mu0, pi1;
};

// Random nuisance tables on a finite (W, Z) support.
Tables random_tables(std::uint64_t seed, const std::vector<double>& ws, const std::vector<double>& zs) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95), m(-2.0, 3.0);
  Tables t;
  for (double w : ws) {
    for (double z : zs) {
      t.mu1[{w, z}] = m(rng);
      t.mu0[{w, z}] = m(rng);
      t.pi1[{w, z}] = u(rng);
    }
  }
  return t;
}

}  // namespace

TEST_CASE("sim1 analytic nuisances give psi(1) = 4.5 and psi(0) = 3.5 at both levels") {
  const Dataset d = balanced_sim1(40);
  const NuisanceSet Q = true_nuisances(Dgp::sim1_binary, d);
  for (double z : {0.0, 1.0}) {
    CHECK(psi_plugin_at(Q, z, 1) == doctest::Approx(4.5).epsilon(1e-14));
    CHECK(psi_plugin_at(Q, z, 0) == doctest::Approx(3.5).epsilon(1e-14));
  }
  CHECK(kappa2_plugin(Q, 0.0, 1) == doctest::Approx(0.375).epsilon(1e-14));
}

TEST_CASE("kappa and psi functionals match finite-support enumeration") {
  const std::vector<double> ws{0, 1, 2, 3};
  const std::vector<double> zs{0, 1, 2, 3};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Tables t = random_tables(seed, ws, zs);
    Rng rng(seed + 100);
    std::uniform_int_distribution<int> pick(0, 3);
    std::vector<double> w, z, y;
    std::vector<int> x;
    for (int i = 0; i < 60; ++i) {
      w.push_back(ws[pick(rng)]);
      z.push_back(zs[i % 4]);
      x.push_back(i % 2);
      y.push_back(0.0);
    }
    const Dataset d = fixtures::one_covariate(w, z, x, y);
    const NuisanceSet Q = fixtures::hand_set(
        d,
        [&t](const Covariates& c) { return (c.x == 1 ? t.mu1 : t.mu0).at({c.w[0], c.z}); },
        [&t](const Covariates& c) { return t.pi1.at({c.w[0], c.z}); }, [](const Covariates&) { return 0.25; });
    std::map<double, double> pw;
    for (double v : w) pw[v] += 1.0 / static_cast<double>(w.size());
    for (int x0 : {0, 1}) {
      for (double zv : zs) {
        double k1 = 0.0, k2 = 0.0;
        for (const auto& [wv, p] : pw) {
          const double pi = x0 == 1 ? t.pi1.at({wv, zv}) : 1.0 - t.pi1.at({wv, zv});
          k1 += p * (x0 == 1 ? t.mu1 : t.mu0).at({wv, zv}) * pi;
          k2 += p * pi;
        }
        CHECK(std::abs(kappa1_plugin(Q, zv, x0) - k1) <= 1e-10);
        CHECK(std::abs(kappa2_plugin(Q, zv, x0) - k2) <= 1e-10);
        CHECK(std::abs(psi_plugin_at(Q, zv, x0) - k1 / k2) <= 1e-10);
      }
      double weighted = 0.0;
      const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
      for (std::size_t k = 0; k < zs.size(); ++k) weighted += probs[k] * psi_plugin_at(Q, zs[k], x0);
      CHECK(std::abs(psi_plugin_weighted(Q, PointMass{zs, probs}, x0) - weighted) <= 1e-10);
    }
  }
}

TEST_CASE("grid tabulation agrees with direct evaluation") {
  const fixtures::Fixture f = fixtures::random_fixture(2, 80, true);
  const NuisanceGrid g = tabulate(f.Q, 1, {1.0, 0.0, 1.0});
  CHECK(g.z == std::vector<double>{0.0, 1.0});
  for (std::size_t r = 0; r < g.z.size(); ++r) {
    CHECK(g.kappa1(r) == doctest::Approx(kappa1_plugin(f.Q, g.z[r], 1)).epsilon(1e-13));
    CHECK(g.kappa2(r) == doctest::Approx(kappa2_plugin(f.Q, g.z[r], 1)).epsilon(1e-13));
  }
  CHECK(g.row_of(1.0) == 1);
  CHECK(g.row_of(0.5) == no_row);
}

TEST_CASE("degenerate kappa2 is an error naming z") {
  const Dataset d = fixtures::one_covariate({0, 1}, {0, 1}, {0, 1}, {1, 2});
  const NuisanceSet Q = fixtures::hand_set(
      d, [](const Covariates&) { return 1.0; }, [](const Covariates&) { return 0.0; },
      [](const Covariates&) { return 0.5; }, 1e-7);
  bool threw = false;
  try {
    psi_plugin_at(Q, 1.0, 1);
  } catch (const Error& e) {
    threw = true;
    CHECK(e.kind() == ErrorKind::degenerate);
    CHECK(std::string(e.what()).find("z = 1") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("continuous sim1 truth is invariant across the trapdoor support") {
  std::vector<double> w, z;
  for (int i = 0; i < 50; ++i) {
    w.push_back(i % 2);
    z.push_back(0.1 + 0.003 * i);
  }
  const Dataset d = fixtures::one_covariate(w, z, std::vector<int>(50, 1), std::vector<double>(50, 0.0),
                                            ZKindRequest::continuous);
  const NuisanceSet Q = true_nuisances(Dgp::sim1_continuous, d);
  const double base = psi_plugin_at(Q, 0.1, 1);
  for (double z : {0.12, 0.18, 0.25, 0.4}) CHECK(psi_plugin_at(Q, z, 1) == doctest::Approx(base).epsilon(1e-12));
  CHECK(psi_plugin_weighted(Q, Density::uniform(0.1, 0.25), 1) == doctest::Approx(base).epsilon(1e-12));
}
