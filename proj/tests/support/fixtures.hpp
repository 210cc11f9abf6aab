#pragma once

#include "napkin/nuisance.hpp"
#include "napkin/simulation.hpp"
#include "napkin/weight.hpp"

#include <algorithm>

#include <cmath>
#include <random>
#include <vector>

namespace fixtures {

using namespace napkin;

struct Fixture {
  Dataset data;
  NuisanceSet Q;
};

// Random DGP with a continuous and a binary covariate. Coefficients are drawn
// from the seed so every fixture differs. Nuisances are main-effects fits.
inline Dataset random_dataset(std::uint64_t seed, std::size_t n, bool discrete_z) {
  Rng rng(mix_seed(seed, 0xf1));
  std::uniform_real_distribution<double> coef(-0.8, 0.8);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a0 = coef(rng), a1 = coef(rng), b0 = coef(rng), b1 = coef(rng), b2 = coef(rng);
  const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng), c3 = coef(rng);
  RowMatrix W(n, 2);
  std::vector<double> z(n), y(n);
  std::vector<int> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    W(i, 0) = normal(rng);
    W(i, 1) = std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.0;
    const double eta = a0 + a1 * W(i, 0);
    if (discrete_z) {
      z[i] = std::bernoulli_distribution(expit(eta))(rng) ? 1.0 : 0.0;
    } else {
      z[i] = eta + 0.7 * normal(rng);
    }
    x[i] = std::bernoulli_distribution(expit(b0 + b1 * z[i] + b2 * W(i, 1)))(rng) ? 1 : 0;
    y[i] = c0 + c1 * x[i] + c2 * z[i] + c3 * W(i, 0) + 0.5 * normal(rng);
  }
  ColumnNames names;
  names.w = {"w0", "w1"};
  return Dataset(std::move(W), std::move(z), std::move(x), std::move(y), RowMatrix(),
                 discrete_z ? ZKindRequest::discrete : ZKindRequest::continuous, 10, names);
}

inline NuisanceSpec main_effects_spec(bool discrete_z) {
  NuisanceSpec spec;
  spec.mu.learner = LearnerKind::least_squares;
  spec.pi.learner = LearnerKind::logistic;
  spec.fz.learner = discrete_z ? LearnerKind::logistic : LearnerKind::conditional_gaussian;
  return spec;
}

inline Fixture random_fixture(std::uint64_t seed, std::size_t n, bool discrete_z) {
  Dataset data = random_dataset(seed, n, discrete_z);
  NuisanceSet Q = fit_nuisance_set(data, main_effects_spec(discrete_z));
  return {std::move(data), std::move(Q)};
}

// Uniform weight over the interquartile range of the observed Z.
inline WeightSpec central_window(const Dataset& data, int nodes = 16) {
  std::vector<double> z = data.z();
  std::sort(z.begin(), z.end());
  return Density::uniform(z[z.size() / 4], z[(3 * z.size()) / 4], nodes);
}

// Nuisance set built from closed-form functions, one fold.
inline NuisanceSet hand_set(const Dataset& data, std::function<double(const Covariates&)> mu,
                            std::function<double(const Covariates&)> pi, std::function<double(const Covariates&)> fz,
                            double clip = 1e-3) {
  NuisanceSet::FoldModels m{make_evaluator(std::move(mu)), make_evaluator(std::move(pi)), make_evaluator(std::move(fz))};
  return NuisanceSet(data, {m}, std::vector<int>(data.n(), 0), clip);
}

inline Dataset one_covariate(std::vector<double> w, std::vector<double> z, std::vector<int> x, std::vector<double> y,
                             ZKindRequest kind = ZKindRequest::discrete, std::vector<double> c = {}) {
  const std::size_t n = w.size();
  RowMatrix W(n, 1), C;
  for (std::size_t i = 0; i < n; ++i) W(i, 0) = w[i];
  ColumnNames names;
  names.w = {"w"};
  if (!c.empty()) {
    C.resize(n, 1);
    for (std::size_t i = 0; i < n; ++i) C(i, 0) = c[i];
    names.c = {"c"};
  }
  return Dataset(std::move(W), std::move(z), std::move(x), std::move(y), std::move(C), kind, 10, names);
}

}  // namespace fixtures
