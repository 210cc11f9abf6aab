#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "napkin/confounder.hpp"
#include "napkin/error.hpp"
#include "napkin/identification.hpp"
#include "napkin/influence.hpp"

#include <cmath>

using namespace napkin;

namespace {

void check_decomposition(const InfluenceValues& v) {
  for (std::size_t i = 0; i < v.phi.size(); ++i) {
    double total = v.phi_Y[i] + v.phi_X[i] + v.phi_W[i];
    if (!v.phi_C.empty()) total += v.phi_C[i];
    CHECK(v.phi[i] == total);
  }
}

bool mean_zero_within(const std::vector<double>& phi, double k) {
  return std::abs(mean_of(phi)) <= k * sd_of(phi) / std::sqrt(static_cast<double>(phi.size()));
}

}  // namespace

TEST_CASE("hand-evaluated discrete influence values at the sim1 truth") {
  // kappa2 = 0.375 and psi = 4.5 at z* = 0, x0 = 1 when W is balanced.
  const Dataset d = fixtures::one_covariate({0, 1}, {1, 0}, {1, 1}, {5.0, 3.5});
  const NuisanceSet Q = true_nuisances(Dgp::sim1_binary, d);
  const InfluenceValues v = influence_discrete(d, Q, 0.0, 1);
  CHECK(v.phi_Y[0] == 0.0);
  CHECK(v.phi_X[0] == 0.0);
  CHECK(v.phi[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(v.phi_Y[1] == doctest::Approx(0.0));
  CHECK(v.phi_X[1] == doctest::Approx(-4.0).epsilon(1e-14));
  CHECK(v.phi_W[1] == doctest::Approx(-2.0 / 3.0).epsilon(1e-14));
  CHECK(v.phi[1] == doctest::Approx(-14.0 / 3.0).epsilon(1e-14));
  check_decomposition(v);
}

TEST_CASE("rows off the fixed level contribute only through phi_W") {
  const fixtures::Fixture f = fixtures::random_fixture(11, 150, true);
  const InfluenceValues v = influence_discrete(f.data, f.Q, 1.0, 0);
  for (std::size_t i = 0; i < f.data.n(); ++i) {
    if (f.data.z()[i] != 1.0) {
      CHECK(v.phi_Y[i] == 0.0);
      CHECK(v.phi_X[i] == 0.0);
      CHECK(v.phi[i] == v.phi_W[i]);
    }
  }
  check_decomposition(v);
}

TEST_CASE("weight disjoint from the observed trapdoor leaves only phi_W") {
  const fixtures::Fixture f = fixtures::random_fixture(12, 150, false);
  const InfluenceValues v = influence_continuous(f.data, f.Q, Density::uniform(50.0, 51.0, 8), 1);
  for (std::size_t i = 0; i < f.data.n(); ++i) {
    CHECK(v.phi_Y[i] == 0.0);
    CHECK(v.phi_X[i] == 0.0);
  }
  check_decomposition(v);
}

TEST_CASE("point mass at one level reproduces the discrete influence") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const fixtures::Fixture f = fixtures::random_fixture(seed, 120, true);
    for (int x0 : {0, 1}) {
      const InfluenceValues a = influence_discrete(f.data, f.Q, 1.0, x0);
      const InfluenceValues b = influence_continuous(f.data, f.Q, PointMass{{1.0}, {1.0}}, x0);
      for (std::size_t i = 0; i < f.data.n(); ++i) CHECK(std::abs(a.phi[i] - b.phi[i]) <= 1e-12);
    }
  }
}

TEST_CASE("phi_W has mean zero at the plug-in") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const fixtures::Fixture f = fixtures::random_fixture(seed, 100, true);
    const InfluenceValues v = influence_discrete(f.data, f.Q, 0.0, 1);
    CHECK(std::abs(mean_of(v.phi_W)) <= 1e-12);
    const fixtures::Fixture g = fixtures::random_fixture(seed, 100, false);
    const InfluenceValues u = influence_continuous(g.data, g.Q, Density::uniform(-0.5, 0.5, 16), 0);
    CHECK(std::abs(mean_of(u.phi_W)) <= 1e-12);
  }
}

TEST_CASE("influence has mean zero at the truth") {
  const std::size_t n = 100000;
  Rng rng(2024);
  const Dataset d1 = sample_sim1(n, ZMode::binary, rng);
  const NuisanceSet Q1 = true_nuisances(Dgp::sim1_binary, d1);
  for (double z : {0.0, 1.0}) {
    for (int x0 : {0, 1}) CHECK(mean_zero_within(influence_discrete(d1, Q1, z, x0).phi, 3.0));
  }
  const Dataset dc = sample_sim1(n, ZMode::continuous, rng);
  const NuisanceSet Qc = true_nuisances(Dgp::sim1_continuous, dc);
  for (int x0 : {0, 1}) {
    CHECK(mean_zero_within(influence_continuous(dc, Qc, Density::uniform(0.1, 0.25), x0).phi, 3.0));
  }
  const Dataset d3 = sample_sim3(n, rng);
  const NuisanceSet Q3 = true_nuisances(Dgp::sim3, d3);
  for (double z : {0.0, 1.0}) {
    for (int x0 : {0, 1}) CHECK(mean_zero_within(influence_discrete(d3, Q3, z, x0).phi, 3.0));
  }
}

TEST_CASE("node cache records kappa2 and psi at each node") {
  const fixtures::Fixture f = fixtures::random_fixture(3, 100, false);
  const InfluenceValues v = influence_continuous(f.data, f.Q, Density::uniform(-0.5, 0.5, 8), 1);
  REQUIRE(v.per_node_cache.z.size() == 8);
  for (std::size_t k = 0; k < 8; ++k) {
    const double z = v.per_node_cache.z[k];
    CHECK(v.per_node_cache.kappa2[k] == doctest::Approx(kappa2_plugin(f.Q, z, 1)).epsilon(1e-13));
    CHECK(v.per_node_cache.psi[k] == doctest::Approx(psi_plugin_at(f.Q, z, 1)).epsilon(1e-13));
  }
}

TEST_CASE("fixed level is rejected by the continuous form") {
  const fixtures::Fixture f = fixtures::random_fixture(3, 60, true);
  CHECK_THROWS_AS(influence_continuous(f.data, f.Q, FixedLevel{1.0}, 1), Error);
}
