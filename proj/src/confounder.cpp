#include "napkin/confounder.hpp"

#include "napkin/error.hpp"
#include "napkin/identification.hpp"
#include "napkin/learners.hpp"

#include <map>
#include <sstream>

namespace napkin {

namespace {

std::vector<double> c_row(const Dataset& data, std::size_t i) {
  std::vector<double> key(data.dc());
  for (std::size_t j = 0; j < data.dc(); ++j) key[j] = data.c()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return key;
}

void check_inputs(const Dataset& data, const NuisanceSet& Q, double z_star, int x0) {
  check_treatment_level(x0);
  if (!data.has_confounders()) fail_validation("the confounder extension needs C columns");
  if (Q.n() != data.n()) fail_validation("nuisance set and dataset sizes differ");
  validate_weightspec(FixedLevel{z_star}, data);
}

}  // namespace

KappaCModels fit_kappa_c(const Dataset& data, const NuisanceSet& Q, double z_star, int x0, KappaCLearner learner) {
  check_inputs(data, Q, z_star, x0);
  const std::size_t n = data.n();
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = Q.pi(x0, z_star, i);
    a[i] = Q.mu(x0, z_star, i) * p;
    b[i] = p;
  }
  std::map<std::vector<double>, std::size_t> cells;
  std::vector<std::size_t> cell_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = cells.try_emplace(c_row(data, i), cells.size());
    cell_of[i] = it->second;
  }
  if (learner == KappaCLearner::automatic) {
    learner = cells.size() <= 10 ? KappaCLearner::saturated : KappaCLearner::least_squares;
  }
  KappaCModels kc;
  kc.learner = learner;
  kc.k1.resize(n);
  kc.k2.resize(n);
  if (learner == KappaCLearner::saturated) {
    std::vector<double> s1(cells.size(), 0.0), s2(cells.size(), 0.0), count(cells.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      s1[cell_of[i]] += a[i];
      s2[cell_of[i]] += b[i];
      count[cell_of[i]] += 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      kc.k1[i] = s1[cell_of[i]] / count[cell_of[i]];
      kc.k2[i] = s2[cell_of[i]] / count[cell_of[i]];
    }
  } else {
    Eigen::MatrixXd X(n, data.dc() + 1);
    X.col(0).setOnes();
    X.rightCols(data.dc()) = data.c();
    const Eigen::Map<const Eigen::VectorXd> ya(a.data(), static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::VectorXd> yb(b.data(), static_cast<Eigen::Index>(n));
    const LinearModel m1 = fit_least_squares(X, ya);
    const LinearModel m2 = fit_least_squares(X, yb);
    kc.coefficients_k1 = m1.coefficients;
    kc.coefficients_k2 = m2.coefficients;
    const Eigen::VectorXd f1 = X * m1.coefficients;
    const Eigen::VectorXd f2 = X * m2.coefficients;
    for (std::size_t i = 0; i < n; ++i) {
      kc.k1[i] = f1(static_cast<Eigen::Index>(i));
      kc.k2[i] = f2(static_cast<Eigen::Index>(i));
    }
  }
  for (double& v : kc.k2) {
    if (v < kappa2_floor) {
      v = kappa2_floor;
      ++kc.clipped;
    }
  }
  return kc;
}

double psi_plugin_c(const Dataset& data, const NuisanceSet&, const KappaCModels& kc) {
  if (kc.k1.size() != data.n() || kc.k2.size() != data.n()) fail_validation("kappa(c) vectors must have length n");
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (!(kc.k2[i] >= kappa2_floor)) {
      std::ostringstream msg;
      msg << "kappa2(C_i) = " << kc.k2[i] << " below " << kappa2_floor << " at observation " << i;
      fail_degenerate(msg.str());
    }
    total += kc.k1[i] / kc.k2[i];
  }
  return total / static_cast<double>(data.n());
}

InfluenceValues influence_confounder(const Dataset& data, const NuisanceSet& Q, const KappaCModels& kc, double z_star,
                                     int x0) {
  check_inputs(data, Q, z_star, x0);
  const double psi = psi_plugin_c(data, Q, kc);
  const std::size_t n = data.n();
  InfluenceValues out;
  out.phi.resize(n);
  out.phi_Y.assign(n, 0.0);
  out.phi_X.assign(n, 0.0);
  out.phi_W.resize(n);
  out.phi_C.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k2 = kc.k2[i];
    const double ratio = kc.k1[i] / k2;
    const double mu = Q.mu(x0, z_star, i);
    const double p = Q.pi(x0, z_star, i);
    if (data.z()[i] == z_star) {
      const double w = 1.0 / (k2 * Q.fz(z_star, i));
      const double treated = data.x()[i] == x0 ? 1.0 : 0.0;
      out.phi_Y[i] = treated * w * (data.y()[i] - mu);
      out.phi_X[i] = w * (mu - ratio) * (treated - p);
    }
    out.phi_W[i] = p / k2 * (mu - ratio);
    out.phi_C[i] = ratio - psi;
    out.phi[i] = out.phi_Y[i] + out.phi_X[i] + out.phi_W[i] + out.phi_C[i];
  }
  return out;
}

EstimateResult estimate_onestep_c(const Dataset& data, const NuisanceSet& Q, const KappaCModels& kc, double z_star,
                                  int x0) {
  const InfluenceValues inf = influence_confounder(data, Q, kc, z_star, x0);
  EstimateResult r;
  r.kind = EstimatorKind::onestep;
  r.x0 = x0;
  r.weight = describe(FixedLevel{z_star});
  r.point = psi_plugin_c(data, Q, kc) + mean_of(inf.phi);
  if (kc.clipped > 0) r.warnings.push_back("kappa2(c) clipped at the floor for some observations");
  attach_inference(r, inf.phi);
  return r;
}

}  // namespace napkin
