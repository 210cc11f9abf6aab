#pragma once

#include "napkin/dataset.hpp"
#include "napkin/estimators.hpp"
#include "napkin/nuisance.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace napkin {

using Rng = std::mt19937_64;

// splitmix64 finalizer applied to seed ^ (index * golden-ratio constant).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

enum class ZMode { binary, continuous };

// Data-generating processes. Each samples (W, Z, X, Y); `confounded` adds a
// binary confounder C and latent variables, with the napkin structure intact.
enum class Dgp { sim1_binary, sim1_continuous, sim3, sim4_binary, confounded };

const char* to_string(Dgp dgp) noexcept;

Dataset sample_sim1(std::size_t n, ZMode mode, Rng& rng);
Dataset sample_sim3(std::size_t n, Rng& rng);
Dataset sample_sim4_binary(std::size_t n, Rng& rng);
Dataset sample_confounded(std::size_t n, Rng& rng);
Dataset sample(Dgp dgp, std::size_t n, Rng& rng);

// Analytic nuisances mu, pi, f_Z of the sim DGPs (not available for `confounded`).
NuisanceSet true_nuisances(Dgp dgp, const Dataset& data, double clip_epsilon = 1e-3);

// psi(x0) - psi(0) at the true nuisances with the exact W law
// (enumeration or Gauss-Legendre); the confounded DGP returns its structural ATE.
double population_truth(Dgp dgp);

// Monte Carlo truth. Sim DGPs: true-nuisance identification functional over
// n_big sampled W rows. Confounded DGP: structural means with X forced to 1 and 0.
double truth_oracle(Dgp dgp, std::size_t n_big, Rng& rng);

// mean Y(x=1) - mean Y(x=0) over n draws of a structural sampler with X forced.
double interventional_ate(const std::function<double(int x, Rng& rng)>& structural, std::size_t n, Rng& rng);

double expit(double eta);

}  // namespace napkin
