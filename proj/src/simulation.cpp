#include "napkin/simulation.hpp"

#include "napkin/error.hpp"
#include "napkin/identification.hpp"
#include "napkin/weight.hpp"

#include <cmath>

namespace napkin {

namespace {

double sim1_mu(double x, double z, double w) {
  return 4.0 + x + z / 2.0 - z * w / 2.0 - 1.5 * w + (1.0 - w) * (1.0 - x) * (1.0 - z);
}
double sim1_pi(double z, double w) { return (2.0 - w + z * w) / 4.0; }
double sim1_upper(double w) { return 0.25 * (1.0 + w); }

double sim3_mu(double x, double z, double w) { return 1.0 + x * z + w * x - x * z * w; }
double sim3_pi(double z, double w) { return (5.5 + w - 2.75 * z - 0.5 * z * w) / 10.0; }
double sim3_fz1(double w) { return expit(-5.0 / 6.0 + 5.0 / 3.0 * w); }
double sim4_fz1(double w) { return expit(-1.0 + w + 0.4 * (w < 0.3 ? 1.0 : 0.0) * w * w); }

constexpr double sim3_w_lo = -2.5;
constexpr double sim3_w_hi = 3.5;

int bernoulli(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng) ? 1 : 0; }

Dataset assemble(std::vector<double> w, std::vector<double> z, std::vector<int> x, std::vector<double> y,
                 ZKindRequest kind, std::vector<double> c = {}) {
  const std::size_t n = y.size();
  RowMatrix W(n, 1);
  for (std::size_t i = 0; i < n; ++i) W(i, 0) = w[i];
  RowMatrix C;
  ColumnNames names;
  names.w = {"w"};
  if (!c.empty()) {
    C.resize(n, 1);
    for (std::size_t i = 0; i < n; ++i) C(i, 0) = c[i];
    names.c = {"c"};
  }
  return Dataset(std::move(W), std::move(z), std::move(x), std::move(y), std::move(C), kind, 10, std::move(names));
}

Dataset sample_sim3_like(std::size_t n, Rng& rng, double (*fz1)(double)) {
  std::uniform_real_distribution<double> uw(sim3_w_lo, sim3_w_hi);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> w(n), z(n), y(n);
  std::vector<int> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = uw(rng);
    z[i] = bernoulli(rng, fz1(w[i]));
    x[i] = bernoulli(rng, sim3_pi(z[i], w[i]));
    y[i] = sim3_mu(x[i], z[i], w[i]) + noise(rng);
  }
  return assemble(std::move(w), std::move(z), std::move(x), std::move(y), ZKindRequest::discrete);
}

// Confounded DGP: C ~ B(0.5); latent U1 -> (W, X), U2 -> (W, Y);
// W ~ B(expit(-0.5 + 0.8C + 0.7U1 + 0.7U2)); Z ~ B(expit(-0.3 + 0.9W + 0.4C));
// X ~ B(expit(-0.5 + 1.2Z + 0.6U1 + 0.5C)); Y = 1 + X + 0.8C + 0.9U2 + 0.5XC + N(0,1).
struct ConfoundedDraw {
  double c, w, z, y;
  int x;
};

ConfoundedDraw draw_confounded(Rng& rng, std::optional<int> forced_x) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ConfoundedDraw d{};
  d.c = bernoulli(rng, 0.5);
  const double u1 = normal(rng);
  const double u2 = normal(rng);
  d.w = bernoulli(rng, expit(-0.5 + 0.8 * d.c + 0.7 * u1 + 0.7 * u2));
  d.z = bernoulli(rng, expit(-0.3 + 0.9 * d.w + 0.4 * d.c));
  const int natural = bernoulli(rng, expit(-0.5 + 1.2 * d.z + 0.6 * u1 + 0.5 * d.c));
  d.x = forced_x ? *forced_x : natural;
  d.y = 1.0 + d.x + 0.8 * d.c + 0.9 * u2 + 0.5 * d.x * d.c + normal(rng);
  return d;
}

// kappa1/kappa2 at trapdoor z for treatment x0 under a W law given by nodes and weights.
template <class Mu, class Pi>
double ratio_functional(int x0, double z, const std::vector<double>& w, const std::vector<double>& pw, Mu mu, Pi pi) {
  double k1 = 0.0;
  double k2 = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double p = x0 == 1 ? pi(z, w[j]) : 1.0 - pi(z, w[j]);
    k1 += pw[j] * mu(x0, z, w[j]) * p;
    k2 += pw[j] * p;
  }
  return k1 / k2;
}

}  // namespace

double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed ^ (index * 0x9E3779B97F4A7C15ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

const char* to_string(Dgp dgp) noexcept {
  switch (dgp) {
    case Dgp::sim1_binary: return "sim1_binary";
    case Dgp::sim1_continuous: return "sim1_continuous";
    case Dgp::sim3: return "sim3";
    case Dgp::sim4_binary: return "sim4_binary";
    case Dgp::confounded: return "confounded";
  }
  return "?";
}

Dataset sample_sim1(std::size_t n, ZMode mode, Rng& rng) {
  if (n < 1) fail_validation("sample size must be >= 1");
  std::normal_distribution<double> noise(0.0, std::sqrt(0.1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> w(n), z(n), y(n);
  std::vector<int> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = bernoulli(rng, 0.5);
    if (mode == ZMode::binary) {
      z[i] = bernoulli(rng, expit(-1.0 + w[i]));
    } else {
      z[i] = 0.1 + (sim1_upper(w[i]) - 0.1) * unit(rng);
    }
    x[i] = bernoulli(rng, sim1_pi(z[i], w[i]));
    y[i] = sim1_mu(x[i], z[i], w[i]) + noise(rng);
  }
  return assemble(std::move(w), std::move(z), std::move(x), std::move(y),
                  mode == ZMode::binary ? ZKindRequest::discrete : ZKindRequest::continuous);
}

Dataset sample_sim3(std::size_t n, Rng& rng) {
  if (n < 1) fail_validation("sample size must be >= 1");
  return sample_sim3_like(n, rng, sim3_fz1);
}

Dataset sample_sim4_binary(std::size_t n, Rng& rng) {
  if (n < 1) fail_validation("sample size must be >= 1");
  return sample_sim3_like(n, rng, sim4_fz1);
}

Dataset sample_confounded(std::size_t n, Rng& rng) {
  if (n < 1) fail_validation("sample size must be >= 1");
  std::vector<double> w(n), z(n), y(n), c(n);
  std::vector<int> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = draw_confounded(rng, std::nullopt);
    w[i] = d.w;
    z[i] = d.z;
    x[i] = d.x;
    y[i] = d.y;
    c[i] = d.c;
  }
  return assemble(std::move(w), std::move(z), std::move(x), std::move(y), ZKindRequest::discrete, std::move(c));
}

Dataset sample(Dgp dgp, std::size_t n, Rng& rng) {
  switch (dgp) {
    case Dgp::sim1_binary: return sample_sim1(n, ZMode::binary, rng);
    case Dgp::sim1_continuous: return sample_sim1(n, ZMode::continuous, rng);
    case Dgp::sim3: return sample_sim3(n, rng);
    case Dgp::sim4_binary: return sample_sim4_binary(n, rng);
    case Dgp::confounded: return sample_confounded(n, rng);
  }
  fail_validation("unknown DGP");
}

NuisanceSet true_nuisances(Dgp dgp, const Dataset& data, double clip_epsilon) {
  NuisanceSet::FoldModels m;
  switch (dgp) {
    case Dgp::sim1_binary:
    case Dgp::sim1_continuous:
      m.mu = make_evaluator([](const Covariates& c) { return sim1_mu(c.x, c.z, c.w[0]); });
      m.pi = make_evaluator([](const Covariates& c) { return sim1_pi(c.z, c.w[0]); });
      if (dgp == Dgp::sim1_binary) {
        m.fz = make_evaluator([](const Covariates& c) {
          const double p = expit(-1.0 + c.w[0]);
          return c.z == 1.0 ? p : (c.z == 0.0 ? 1.0 - p : 0.0);
        });
      } else {
        m.fz = make_evaluator([](const Covariates& c) {
          const double hi = sim1_upper(c.w[0]);
          return (c.z >= 0.1 && c.z <= hi) ? 1.0 / (hi - 0.1) : 0.0;
        });
      }
      break;
    case Dgp::sim3:
    case Dgp::sim4_binary: {
      m.mu = make_evaluator([](const Covariates& c) { return sim3_mu(c.x, c.z, c.w[0]); });
      m.pi = make_evaluator([](const Covariates& c) { return sim3_pi(c.z, c.w[0]); });
      auto fz1 = dgp == Dgp::sim3 ? sim3_fz1 : sim4_fz1;
      m.fz = make_evaluator([fz1](const Covariates& c) {
        const double p = fz1(c.w[0]);
        return c.z == 1.0 ? p : (c.z == 0.0 ? 1.0 - p : 0.0);
      });
      break;
    }
    case Dgp::confounded:
      fail_validation("the confounded DGP has no closed-form nuisances");
  }
  return NuisanceSet(data, {m}, std::vector<int>(data.n(), 0), clip_epsilon);
}

double population_truth(Dgp dgp) {
  switch (dgp) {
    case Dgp::sim1_binary:
    case Dgp::sim1_continuous: {
      const std::vector<double> w{0.0, 1.0};
      const std::vector<double> pw{0.5, 0.5};
      const double z = dgp == Dgp::sim1_binary ? 0.0 : 0.15;
      return ratio_functional(1, z, w, pw, sim1_mu, sim1_pi) - ratio_functional(0, z, w, pw, sim1_mu, sim1_pi);
    }
    case Dgp::sim3:
    case Dgp::sim4_binary: {
      const QuadratureRule rule = build_quadrature(Density::uniform(sim3_w_lo, sim3_w_hi, 8));
      return ratio_functional(1, 0.0, rule.nodes, rule.weights, sim3_mu, sim3_pi) -
             ratio_functional(0, 0.0, rule.nodes, rule.weights, sim3_mu, sim3_pi);
    }
    case Dgp::confounded:
      return 1.25;
  }
  return 0.0;
}

double truth_oracle(Dgp dgp, std::size_t n_big, Rng& rng) {
  if (n_big < 1) fail_validation("truth oracle needs n_big >= 1");
  if (dgp == Dgp::confounded) {
    return interventional_ate([](int x, Rng& r) { return draw_confounded(r, x).y; }, n_big, rng);
  }
  std::vector<double> w(n_big);
  const std::vector<double> pw(n_big, 1.0 / static_cast<double>(n_big));
  if (dgp == Dgp::sim1_binary || dgp == Dgp::sim1_continuous) {
    for (auto& v : w) v = bernoulli(rng, 0.5);
    const double z = dgp == Dgp::sim1_binary ? 0.0 : 0.15;
    return ratio_functional(1, z, w, pw, sim1_mu, sim1_pi) - ratio_functional(0, z, w, pw, sim1_mu, sim1_pi);
  }
  std::uniform_real_distribution<double> uw(sim3_w_lo, sim3_w_hi);
  for (auto& v : w) v = uw(rng);
  return ratio_functional(1, 0.0, w, pw, sim3_mu, sim3_pi) - ratio_functional(0, 0.0, w, pw, sim3_mu, sim3_pi);
}

double interventional_ate(const std::function<double(int x, Rng& rng)>& structural, std::size_t n, Rng& rng) {
  if (n < 1) fail_validation("interventional sampling needs n >= 1");
  double treated = 0.0;
  double control = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    treated += structural(1, rng);
    control += structural(0, rng);
  }
  return (treated - control) / static_cast<double>(n);
}

}  // namespace napkin
