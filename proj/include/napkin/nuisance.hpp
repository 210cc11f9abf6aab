#pragma once

#include "napkin/dataset.hpp"
#include "napkin/design.hpp"
#include "napkin/learners.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace napkin {

// A fitted nuisance function. Outcome evaluators return mu(x, z, w), propensity
// evaluators return the unclipped P(X = 1 | z, w), density evaluators f_Z(z | w).
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual double operator()(const Covariates& cov) const = 0;
};

using EvaluatorPtr = std::shared_ptr<const Evaluator>;

EvaluatorPtr make_evaluator(std::function<double(const Covariates&)> fn);

enum class LearnerKind { least_squares, logistic, knn, conditional_gaussian, stratified_uniform };

struct LearnerSpec {
  LearnerKind learner = LearnerKind::least_squares;
  // W columns entering the main-effects design; nullopt means all of them.
  std::optional<std::vector<std::size_t>> covariate_indices;
  bool include_treatment = true;  // outcome model only
  bool include_z = true;          // outcome and propensity models
  bool include_confounders = true;
  // Explicit formula terms replacing the main-effects design (intercept implied).
  std::vector<std::string> terms;
  int k = 10;
};

inline LearnerSpec with_learner(LearnerKind kind) {
  LearnerSpec spec;
  spec.learner = kind;
  return spec;
}

struct NuisanceSpec {
  LearnerSpec mu = with_learner(LearnerKind::least_squares);
  LearnerSpec pi = with_learner(LearnerKind::logistic);
  LearnerSpec fz = with_learner(LearnerKind::logistic);
  int cross_fit_folds = 1;
  double clip_epsilon = 1e-3;
  std::uint64_t fold_seed = 0x5eed;
  // Adds mu_z_shift * z to the fitted outcome model; a deliberate
  // misspecification used to probe the invariance diagnostic.
  double mu_z_shift = 0.0;
};

enum class NuisanceRole { mu, pi, fz };

void validate_nuisance_spec(const NuisanceSpec& spec, const Dataset& data);

// Design used for one nuisance under the given spec.
Design nuisance_design(const LearnerSpec& spec, NuisanceRole role, const Dataset& data);

class CondDensityModel {
 public:
  enum class Variant { bernoulli_logistic, multinomial_logistic, gaussian_linear, stratified_uniform, knn_mass };

  Variant variant() const { return variant_; }
  // Density (continuous Z) or mass (discrete Z), clipped below at clip_epsilon
  // and, for masses, above at 1 - clip_epsilon.
  double operator()(const Covariates& cov) const;
  double unclipped(const Covariates& cov) const;

  const LogisticModel& logistic() const { return logistic_; }
  const LinearModel& linear() const { return linear_; }
  double residual_sd() const { return sd_; }
  const std::vector<double>& levels() const { return levels_; }

  friend CondDensityModel fit_cond_density(const Dataset& data, const std::vector<std::size_t>& rows,
                                           const LearnerSpec& spec, double clip_epsilon);

 private:
  Variant variant_ = Variant::bernoulli_logistic;
  Design design_;
  LogisticModel logistic_;
  MultinomialModel multinomial_;
  LinearModel linear_;
  KnnIndex knn_;
  double sd_ = 0.0;
  std::vector<double> levels_;
  std::vector<std::size_t> cell_columns_;
  std::map<std::vector<double>, std::pair<double, double>> cells_;
  double clip_epsilon_ = 1e-3;
};

// Conditional density of Z given (W, C) fitted on the listed rows.
CondDensityModel fit_cond_density(const Dataset& data, const std::vector<std::size_t>& rows,
                                  const LearnerSpec& spec, double clip_epsilon);
CondDensityModel fit_cond_density(const std::vector<double>& z, const RowMatrix& W, const LearnerSpec& spec,
                                  double clip_epsilon, ZKindRequest z_kind = ZKindRequest::automatic);

// The nuisance set Q = {mu, pi, f_Z, p_W}. Evaluation tied to an observed row
// uses that row's out-of-fold models; off-sample covariates use the average
// over folds.
class NuisanceSet {
 public:
  struct FoldModels {
    EvaluatorPtr mu;
    EvaluatorPtr pi;
    EvaluatorPtr fz;
  };

  NuisanceSet(const Dataset& data, std::vector<FoldModels> folds, std::vector<int> fold_of_row,
              double clip_epsilon);

  std::size_t n() const { return fold_of_row_.size(); }
  std::size_t fold_count() const { return folds_.size(); }
  int fold_of(std::size_t row) const { return fold_of_row_[row]; }
  const std::vector<int>& fold_assignment() const { return fold_of_row_; }
  double clip_epsilon() const { return clip_epsilon_; }
  bool z_discrete() const { return z_discrete_; }

  double mu(int x, double z, std::size_t row) const;
  double pi(int x, double z, std::size_t row) const;
  double fz(double z, std::size_t row) const;
  // Unclipped P(X = 1 | z, w) and f_Z for clipping diagnostics.
  double pi_raw(double z, std::size_t row) const;
  double fz_raw(double z, std::size_t row) const;

  double mu_at(int x, double z, const double* w, const double* c) const;
  double pi_at(int x, double z, const double* w, const double* c) const;
  double fz_at(double z, const double* w, const double* c) const;

  // Rows sharing fold, W and C values evaluate identically; they form a group.
  std::size_t group_count() const { return group_rep_.size(); }
  std::size_t group_of(std::size_t row) const { return group_of_row_[row]; }
  std::size_t group_representative(std::size_t g) const { return group_rep_[g]; }
  // Fraction of observations in group g.
  double group_weight(std::size_t g) const { return group_weight_[g]; }

  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string message) { warnings_.push_back(std::move(message)); }

 private:
  Covariates covariates(double x, double z, std::size_t row) const;
  double clip_pi(double p) const;
  double clip_fz(double f) const;

  RowMatrix w_;
  RowMatrix c_;
  std::vector<FoldModels> folds_;
  std::vector<int> fold_of_row_;
  double clip_epsilon_;
  bool z_discrete_;
  std::vector<std::size_t> group_of_row_;
  std::vector<std::size_t> group_rep_;
  std::vector<double> group_weight_;
  std::vector<std::string> warnings_;
};

// Deterministic fold labels in [0, K) from a seeded shuffle.
std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed);

NuisanceSet fit_nuisance_set(const Dataset& data, const NuisanceSpec& spec);

}  // namespace napkin
