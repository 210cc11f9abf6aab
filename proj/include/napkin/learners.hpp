#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace napkin {

struct LinearModel {
  Eigen::VectorXd coefficients;  // intercept first when the design has one
  double residual_variance = 0.0;
  bool ridge_applied = false;

  double predict(const double* row) const;
};

// Ordinary least squares. Rank-deficient designs get one ridge retry with
// penalty 1e-8 * trace(X'X) / p; a still-singular system throws a degenerate error.
LinearModel fit_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct LogisticModel {
  Eigen::VectorXd coefficients;
  bool converged = false;
  int iterations = 0;

  double predict(const double* row, double offset = 0.0) const;
};

struct IrlsOptions {
  int max_iterations = 100;
  double score_tolerance = 1e-10;  // max-norm of the weighted score divided by n
  double coefficient_cap = 30.0;
};

// Weighted logistic regression by Newton-Raphson with step halving. `offset`
// enters the linear predictor with coefficient 1. Separation ends with
// coefficients at the cap and converged = false.
LogisticModel fit_logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const Eigen::VectorXd* offset = nullptr,
                                const Eigen::VectorXd* weights = nullptr,
                                const IrlsOptions& options = {});

// Max-norm of (1/n) * sum_i w_i x_i (y_i - p_i) at the given coefficients.
double logistic_score_norm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& coefficients, const Eigen::VectorXd* offset = nullptr,
                           const Eigen::VectorXd* weights = nullptr);

// Multinomial logistic regression with the first category as reference.
// Column k of the coefficient matrix holds the linear predictor of category k + 1.
struct MultinomialModel {
  Eigen::MatrixXd coefficients;
  bool converged = false;
  int iterations = 0;

  // Probability of each of the K categories.
  std::vector<double> probabilities(const double* row) const;
};

MultinomialModel fit_multinomial(const Eigen::MatrixXd& X, const std::vector<int>& category,
                                 int category_count, const IrlsOptions& options = {});

// Brute-force k-nearest-neighbour index over standardized features.
class KnnIndex {
 public:
  KnnIndex() = default;
  KnnIndex(Eigen::MatrixXd features, std::vector<double> targets, int k);

  // Mean target over the k nearest training rows; ties broken by row order.
  double mean_target(const double* query) const;
  // Fraction of the k nearest training rows whose target equals `value`.
  double fraction_equal(const double* query, double value) const;

 private:
  std::vector<std::size_t> neighbours(const double* query) const;

  Eigen::MatrixXd features_;
  Eigen::VectorXd center_;
  Eigen::VectorXd scale_;
  std::vector<double> targets_;
  int k_ = 10;
};

}  // namespace napkin
