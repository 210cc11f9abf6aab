#include "napkin/learners.hpp"

#include "napkin/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace napkin {

namespace {

double log1p_exp(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                                 const Eigen::VectorXd* offset) {
  Eigen::VectorXd eta = X * beta;
  if (offset) eta += *offset;
  return eta;
}

double weight_of(const Eigen::VectorXd* weights, Eigen::Index i) { return weights ? (*weights)(i) : 1.0; }

double logistic_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd* offset, const Eigen::VectorXd* weights) {
  const Eigen::VectorXd eta = linear_predictor(X, beta, offset);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    ll += weight_of(weights, i) * (y(i) * eta(i) - log1p_exp(eta(i)));
  }
  return ll;
}

Eigen::VectorXd clamp_to_cap(Eigen::VectorXd beta, double cap, bool& capped) {
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta(j) >= cap) {
      beta(j) = cap;
      capped = true;
    } else if (beta(j) <= -cap) {
      beta(j) = -cap;
      capped = true;
    }
  }
  return beta;
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& H, const Eigen::VectorXd& rhs) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    Eigen::VectorXd step = ldlt.solve(rhs);
    if (step.allFinite()) return step;
  }
  const double trace = std::max(H.trace(), 1e-300);
  Eigen::MatrixXd ridged = H;
  ridged.diagonal().array() += 1e-8 * trace / static_cast<double>(H.rows()) + 1e-300;
  Eigen::VectorXd step = ridged.ldlt().solve(rhs);
  if (!step.allFinite()) step.setZero();
  return step;
}

}  // namespace

double LinearModel::predict(const double* row) const {
  double v = 0.0;
  for (Eigen::Index j = 0; j < coefficients.size(); ++j) v += coefficients(j) * row[j];
  return v;
}

LinearModel fit_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) fail_validation("least squares: design and response lengths differ");
  if (X.rows() == 0 || X.cols() == 0) fail_validation("least squares: empty design");
  LinearModel model;
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (n >= p && qr.rank() == p) {
    model.coefficients = qr.solve(y);
  } else {
    const Eigen::MatrixXd xtx = X.transpose() * X;
    const double lambda = 1e-8 * xtx.trace() / static_cast<double>(p);
    Eigen::MatrixXd ridged = xtx;
    ridged.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(ridged);
    if (!(lambda > 0.0) || llt.info() != Eigen::Success) {
      fail_degenerate("singular design in least squares even after ridge fallback");
    }
    model.coefficients = llt.solve(X.transpose() * y);
    if (!model.coefficients.allFinite()) fail_degenerate("singular design in least squares");
    model.ridge_applied = true;
  }
  const Eigen::VectorXd residual = y - X * model.coefficients;
  model.residual_variance = n > p ? residual.squaredNorm() / static_cast<double>(n - p) : 0.0;
  return model;
}

double LogisticModel::predict(const double* row, double offset) const {
  double eta = offset;
  for (Eigen::Index j = 0; j < coefficients.size(); ++j) eta += coefficients(j) * row[j];
  return expit(eta);
}

double logistic_score_norm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& coefficients, const Eigen::VectorXd* offset,
                           const Eigen::VectorXd* weights) {
  const Eigen::VectorXd eta = linear_predictor(X, coefficients, offset);
  Eigen::VectorXd r(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) r(i) = weight_of(weights, i) * (y(i) - expit(eta(i)));
  if (X.rows() == 0) return 0.0;
  return (X.transpose() * r).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
}

LogisticModel fit_logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const Eigen::VectorXd* offset, const Eigen::VectorXd* weights,
                                const IrlsOptions& options) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) fail_validation("logistic regression: design and response lengths differ");
  if (offset && offset->size() != n) fail_validation("logistic regression: offset length mismatch");
  if (weights && weights->size() != n) fail_validation("logistic regression: weight length mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) fail_validation("logistic regression: response must be 0/1");
    if (weights && !((*weights)(i) >= 0.0)) fail_validation("logistic regression: negative weight");
  }

  LogisticModel model;
  model.coefficients = Eigen::VectorXd::Zero(p);
  if (n == 0 || p == 0) {
    model.converged = true;
    return model;
  }
  bool capped = false;
  double ll = logistic_loglik(X, y, model.coefficients, offset, weights);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd eta = linear_predictor(X, model.coefficients, offset);
    Eigen::VectorXd resid(n);
    Eigen::VectorXd curvature(n);
    // Complete separation: every weighted observation is fitted almost exactly.
    bool separated = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prob = expit(eta(i));
      const double w = weight_of(weights, i);
      resid(i) = w * (y(i) - prob);
      curvature(i) = w * prob * (1.0 - prob);
      if (w > 0.0 && std::abs(y(i) - prob) > 1e-8) separated = false;
    }
    const Eigen::VectorXd score = X.transpose() * resid;
    if (!separated && score.cwiseAbs().maxCoeff() / static_cast<double>(n) <= options.score_tolerance) break;
    if (capped) break;
    const Eigen::MatrixXd H = X.transpose() * curvature.asDiagonal() * X;
    const Eigen::VectorXd step = solve_spd(H, score);
    double t = 1.0;
    Eigen::VectorXd candidate = model.coefficients;
    bool step_capped = false;
    double candidate_ll = ll;
    while (t > 1e-12) {
      step_capped = false;
      candidate = clamp_to_cap(model.coefficients + t * step, options.coefficient_cap, step_capped);
      candidate_ll = logistic_loglik(X, y, candidate, offset, weights);
      if (candidate_ll >= ll - 1e-12 * std::abs(ll)) break;
      t *= 0.5;
    }
    model.iterations = iter + 1;
    if (!(candidate_ll >= ll - 1e-12 * std::abs(ll))) break;
    const bool stalled = (candidate - model.coefficients).cwiseAbs().maxCoeff() == 0.0;
    model.coefficients = candidate;
    ll = candidate_ll;
    capped = capped || step_capped;
    if (stalled) break;
  }
  const double final_score = logistic_score_norm(X, y, model.coefficients, offset, weights);
  model.converged = !capped && final_score <= options.score_tolerance;
  return model;
}

std::vector<double> MultinomialModel::probabilities(const double* row) const {
  const Eigen::Index p = coefficients.rows();
  const Eigen::Index m = coefficients.cols();
  std::vector<double> eta(m + 1, 0.0);
  for (Eigen::Index k = 0; k < m; ++k) {
    double v = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) v += coefficients(j, k) * row[j];
    eta[k + 1] = v;
  }
  const double top = *std::max_element(eta.begin(), eta.end());
  double total = 0.0;
  for (double& e : eta) {
    e = std::exp(e - top);
    total += e;
  }
  for (double& e : eta) e /= total;
  return eta;
}

MultinomialModel fit_multinomial(const Eigen::MatrixXd& X, const std::vector<int>& category,
                                 int category_count, const IrlsOptions& options) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const Eigen::Index m = category_count - 1;
  if (category_count < 2) fail_validation("multinomial regression needs at least two categories");
  if (static_cast<Eigen::Index>(category.size()) != n) fail_validation("multinomial: length mismatch");
  MultinomialModel model;
  model.coefficients = Eigen::MatrixXd::Zero(p, m);

  auto loglik = [&](const Eigen::MatrixXd& beta) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd eta = beta.transpose() * X.row(i).transpose();
      const double top = std::max(0.0, eta.maxCoeff());
      double total = std::exp(-top);
      for (Eigen::Index k = 0; k < m; ++k) total += std::exp(eta(k) - top);
      const double chosen = category[i] == 0 ? 0.0 : eta(category[i] - 1);
      ll += chosen - top - std::log(total);
    }
    return ll;
  };

  bool capped = false;
  double ll = loglik(model.coefficients);
  double score_norm = 0.0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::VectorXd score = Eigen::VectorXd::Zero(p * m);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p * m, p * m);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd xi = X.row(i).transpose();
      const auto probs = model.probabilities(xi.data());
      for (Eigen::Index a = 0; a < m; ++a) {
        const double ya = category[i] == a + 1 ? 1.0 : 0.0;
        score.segment(a * p, p) += (ya - probs[a + 1]) * xi;
        for (Eigen::Index b = 0; b < m; ++b) {
          const double c = probs[a + 1] * ((a == b ? 1.0 : 0.0) - probs[b + 1]);
          H.block(a * p, b * p, p, p) += c * xi * xi.transpose();
        }
      }
    }
    score_norm = score.cwiseAbs().maxCoeff() / static_cast<double>(std::max<Eigen::Index>(n, 1));
    if (score_norm <= options.score_tolerance || capped) break;
    const Eigen::VectorXd step = solve_spd(H, score);
    double t = 1.0;
    Eigen::MatrixXd candidate;
    double candidate_ll = ll;
    bool step_capped = false;
    while (t > 1e-12) {
      step_capped = false;
      Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(model.coefficients.data(), p * m) + t * step;
      flat = clamp_to_cap(flat, options.coefficient_cap, step_capped);
      candidate = Eigen::Map<Eigen::MatrixXd>(flat.data(), p, m);
      candidate_ll = loglik(candidate);
      if (candidate_ll >= ll - 1e-12 * std::abs(ll)) break;
      t *= 0.5;
    }
    model.iterations = iter + 1;
    if (!(candidate_ll >= ll - 1e-12 * std::abs(ll))) break;
    model.coefficients = candidate;
    ll = candidate_ll;
    capped = capped || step_capped;
  }
  model.converged = !capped && score_norm <= options.score_tolerance;
  return model;
}

KnnIndex::KnnIndex(Eigen::MatrixXd features, std::vector<double> targets, int k)
    : features_(std::move(features)), targets_(std::move(targets)), k_(k) {
  if (k_ < 1) fail_validation("knn needs k >= 1");
  if (features_.rows() == 0) fail_validation("knn needs training rows");
  center_ = features_.colwise().mean().transpose();
  scale_ = Eigen::VectorXd::Ones(features_.cols());
  for (Eigen::Index j = 0; j < features_.cols(); ++j) {
    const double sd = std::sqrt((features_.col(j).array() - center_(j)).square().mean());
    if (sd > 0.0) scale_(j) = sd;
  }
  for (Eigen::Index j = 0; j < features_.cols(); ++j) {
    features_.col(j) = (features_.col(j).array() - center_(j)) / scale_(j);
  }
}

std::vector<std::size_t> KnnIndex::neighbours(const double* query) const {
  const Eigen::Index n = features_.rows();
  const Eigen::Index d = features_.cols();
  std::vector<std::pair<double, std::size_t>> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double u = (query[j] - center_(j)) / scale_(j) - features_(i, j);
      s += u * u;
    }
    dist[static_cast<std::size_t>(i)] = {s, static_cast<std::size_t>(i)};
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t j = 0; j < k; ++j) out[j] = dist[j].second;
  return out;
}

double KnnIndex::mean_target(const double* query) const {
  const auto idx = neighbours(query);
  double total = 0.0;
  for (std::size_t i : idx) total += targets_[i];
  return total / static_cast<double>(idx.size());
}

double KnnIndex::fraction_equal(const double* query, double value) const {
  const auto idx = neighbours(query);
  double hits = 0.0;
  for (std::size_t i : idx) hits += targets_[i] == value ? 1.0 : 0.0;
  return hits / static_cast<double>(idx.size());
}

}  // namespace napkin
