#include "napkin/nuisance.hpp"

#include "napkin/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace napkin {

namespace {

class FunctionEvaluator final : public Evaluator {
 public:
  explicit FunctionEvaluator(std::function<double(const Covariates&)> fn) : fn_(std::move(fn)) {}
  double operator()(const Covariates& cov) const override { return fn_(cov); }

 private:
  std::function<double(const Covariates&)> fn_;
};

class LinearEvaluator final : public Evaluator {
 public:
  LinearEvaluator(Design design, LinearModel model) : design_(std::move(design)), model_(std::move(model)) {}
  double operator()(const Covariates& cov) const override {
    std::vector<double> buf(design_.width());
    design_.fill(cov, buf.data());
    return model_.predict(buf.data());
  }

 private:
  Design design_;
  LinearModel model_;
};

class LogisticEvaluator final : public Evaluator {
 public:
  LogisticEvaluator(Design design, LogisticModel model) : design_(std::move(design)), model_(std::move(model)) {}
  double operator()(const Covariates& cov) const override {
    std::vector<double> buf(design_.width());
    design_.fill(cov, buf.data());
    return model_.predict(buf.data());
  }

 private:
  Design design_;
  LogisticModel model_;
};

class KnnEvaluator final : public Evaluator {
 public:
  KnnEvaluator(Design design, KnnIndex index) : design_(std::move(design)), index_(std::move(index)) {}
  double operator()(const Covariates& cov) const override {
    std::vector<double> buf(design_.width());
    design_.fill(cov, buf.data());
    return index_.mean_target(buf.data() + 1);
  }

 private:
  Design design_;
  KnnIndex index_;
};

class DensityEvaluator final : public Evaluator {
 public:
  explicit DensityEvaluator(CondDensityModel model) : model_(std::move(model)) {}
  double operator()(const Covariates& cov) const override { return model_.unclipped(cov); }

 private:
  CondDensityModel model_;
};

Eigen::MatrixXd drop_intercept(const Eigen::MatrixXd& m) { return m.rightCols(m.cols() - 1); }

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

const char* role_name(NuisanceRole role) {
  switch (role) {
    case NuisanceRole::mu: return "mu";
    case NuisanceRole::pi: return "pi";
    case NuisanceRole::fz: return "fz";
  }
  return "?";
}

std::vector<double> cell_key(const Covariates& cov, const std::vector<std::size_t>& columns) {
  std::vector<double> key;
  key.reserve(columns.size());
  for (std::size_t j : columns) key.push_back(cov.w[j]);
  return key;
}

EvaluatorPtr fit_regression(const Dataset& data, const std::vector<std::size_t>& rows, const LearnerSpec& spec,
                            NuisanceRole role) {
  const Design design = nuisance_design(spec, role, data);
  const bool outcome = role == NuisanceRole::mu;
  const Eigen::MatrixXd X = design.matrix(data, rows, outcome, true);
  Eigen::VectorXd target(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    target(static_cast<Eigen::Index>(k)) = outcome ? data.y()[rows[k]] : static_cast<double>(data.x()[rows[k]]);
  }
  switch (spec.learner) {
    case LearnerKind::least_squares:
      return std::make_shared<LinearEvaluator>(design, fit_least_squares(X, target));
    case LearnerKind::logistic: {
      if (outcome && !data.y_binary()) fail_validation("logistic outcome model requires binary Y");
      return std::make_shared<LogisticEvaluator>(design, fit_logistic_irls(X, target));
    }
    case LearnerKind::knn: {
      std::vector<double> t(target.data(), target.data() + target.size());
      return std::make_shared<KnnEvaluator>(design, KnnIndex(drop_intercept(X), std::move(t), spec.k));
    }
    default:
      fail_validation(std::string("learner not available for ") + role_name(role));
  }
}

}  // namespace

EvaluatorPtr make_evaluator(std::function<double(const Covariates&)> fn) {
  return std::make_shared<FunctionEvaluator>(std::move(fn));
}

Design nuisance_design(const LearnerSpec& spec, NuisanceRole role, const Dataset& data) {
  const auto& names = data.names();
  if (!spec.terms.empty()) {
    std::vector<Term> terms;
    for (const auto& text : spec.terms) terms.push_back(parse_term(text, names));
    Design design(std::move(terms));
    if (role != NuisanceRole::mu && design.uses(VarKind::x)) {
      fail_validation(std::string(role_name(role)) + " model terms may not use the treatment");
    }
    if (role == NuisanceRole::fz && design.uses(VarKind::z)) {
      fail_validation("fz model terms may not use Z");
    }
    if (design.uses(VarKind::c) && !data.has_confounders()) {
      fail_validation("model term uses C but the dataset has no confounders");
    }
    return design;
  }
  std::vector<std::size_t> w_indices;
  if (spec.covariate_indices) {
    w_indices = *spec.covariate_indices;
  } else {
    w_indices = all_rows(data.dw());
  }
  const bool use_x = role == NuisanceRole::mu && spec.include_treatment;
  const bool use_z = role != NuisanceRole::fz && spec.include_z;
  const std::size_t c_count = spec.include_confounders ? data.dc() : 0;
  return main_effects_design(use_x, use_z, w_indices, c_count, names);
}

void validate_nuisance_spec(const NuisanceSpec& spec, const Dataset& data) {
  if (spec.cross_fit_folds < 1) fail_validation("cross_fit_folds must be >= 1");
  if (static_cast<std::size_t>(spec.cross_fit_folds) > data.n()) {
    fail_validation("cross_fit_folds exceeds the number of observations");
  }
  if (!(spec.clip_epsilon > 0.0 && spec.clip_epsilon <= 0.1)) {
    fail_validation("clip_epsilon must lie in (0, 0.1]");
  }
  for (const LearnerSpec* s : {&spec.mu, &spec.pi, &spec.fz}) {
    if (s->covariate_indices) {
      for (std::size_t j : *s->covariate_indices) {
        if (j >= data.dw()) fail_validation("covariate index " + std::to_string(j) + " outside W");
      }
    }
    if (s->learner == LearnerKind::knn && s->k < 1) fail_validation("knn needs k >= 1");
  }
  nuisance_design(spec.mu, NuisanceRole::mu, data);
  nuisance_design(spec.pi, NuisanceRole::pi, data);
  nuisance_design(spec.fz, NuisanceRole::fz, data);
  if (spec.mu.learner == LearnerKind::conditional_gaussian || spec.mu.learner == LearnerKind::stratified_uniform) {
    fail_validation("density learners cannot model mu");
  }
  if (spec.pi.learner == LearnerKind::conditional_gaussian || spec.pi.learner == LearnerKind::stratified_uniform) {
    fail_validation("density learners cannot model pi");
  }
  if (spec.mu.learner == LearnerKind::logistic && !data.y_binary()) {
    fail_validation("logistic outcome model requires binary Y");
  }
  const auto fz = spec.fz.learner;
  if (data.z_discrete()) {
    if (fz != LearnerKind::logistic && fz != LearnerKind::knn) {
      fail_validation("discrete Z needs a logistic or knn fz learner");
    }
  } else if (fz != LearnerKind::conditional_gaussian && fz != LearnerKind::stratified_uniform) {
    fail_validation("continuous Z needs a conditional-gaussian or stratified-uniform fz learner");
  }
}

double CondDensityModel::unclipped(const Covariates& cov) const {
  std::vector<double> buf(design_.width());
  design_.fill(cov, buf.data());
  switch (variant_) {
    case Variant::bernoulli_logistic: {
      if (levels_.size() == 1) return cov.z == levels_[0] ? 1.0 : 0.0;
      const double p = logistic_.predict(buf.data());
      if (cov.z == levels_[1]) return p;
      if (cov.z == levels_[0]) return 1.0 - p;
      return 0.0;
    }
    case Variant::multinomial_logistic: {
      const auto probs = multinomial_.probabilities(buf.data());
      for (std::size_t k = 0; k < levels_.size(); ++k) {
        if (cov.z == levels_[k]) return probs[k];
      }
      return 0.0;
    }
    case Variant::gaussian_linear: {
      const double mean = linear_.predict(buf.data());
      const double u = (cov.z - mean) / sd_;
      return std::exp(-0.5 * u * u) / (sd_ * std::sqrt(2.0 * std::numbers::pi));
    }
    case Variant::stratified_uniform: {
      auto it = cells_.find(cell_key(cov, cell_columns_));
      std::pair<double, double> range;
      if (it != cells_.end()) {
        range = it->second;
      } else {
        range = {cells_.begin()->second.first, cells_.begin()->second.second};
        for (const auto& [key, r] : cells_) {
          range.first = std::min(range.first, r.first);
          range.second = std::max(range.second, r.second);
        }
      }
      if (cov.z < range.first || cov.z > range.second) return 0.0;
      return 1.0 / (range.second - range.first);
    }
    case Variant::knn_mass:
      return knn_.fraction_equal(buf.data() + 1, cov.z);
  }
  return 0.0;
}

double CondDensityModel::operator()(const Covariates& cov) const {
  double f = std::max(unclipped(cov), clip_epsilon_);
  if (variant_ == Variant::bernoulli_logistic || variant_ == Variant::multinomial_logistic ||
      variant_ == Variant::knn_mass) {
    f = std::min(f, 1.0 - clip_epsilon_);
  }
  return f;
}

CondDensityModel fit_cond_density(const Dataset& data, const std::vector<std::size_t>& rows,
                                  const LearnerSpec& spec, double clip_epsilon) {
  if (rows.empty()) fail_validation("density fit needs training rows");
  CondDensityModel model;
  model.clip_epsilon_ = clip_epsilon;
  model.design_ = nuisance_design(spec, NuisanceRole::fz, data);
  const Eigen::MatrixXd X = model.design_.matrix(data, rows, false, false);
  Eigen::VectorXd z(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) z(static_cast<Eigen::Index>(k)) = data.z()[rows[k]];

  if (data.z_discrete()) {
    model.levels_ = data.z_levels();
    if (spec.learner == LearnerKind::knn) {
      model.variant_ = CondDensityModel::Variant::knn_mass;
      std::vector<double> t(z.data(), z.data() + z.size());
      model.knn_ = KnnIndex(drop_intercept(X), std::move(t), spec.k);
      return model;
    }
    if (spec.learner != LearnerKind::logistic) fail_validation("discrete Z needs a logistic or knn fz learner");
    if (model.levels_.size() <= 2) {
      model.variant_ = CondDensityModel::Variant::bernoulli_logistic;
      if (model.levels_.size() == 2) {
        Eigen::VectorXd indicator = (z.array() == model.levels_[1]).cast<double>();
        model.logistic_ = fit_logistic_irls(X, indicator);
      }
      return model;
    }
    model.variant_ = CondDensityModel::Variant::multinomial_logistic;
    std::vector<int> category(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      category[k] = static_cast<int>(std::lower_bound(model.levels_.begin(), model.levels_.end(), z(k)) -
                                     model.levels_.begin());
    }
    model.multinomial_ = fit_multinomial(X, category, static_cast<int>(model.levels_.size()));
    return model;
  }

  if (spec.learner == LearnerKind::conditional_gaussian) {
    model.variant_ = CondDensityModel::Variant::gaussian_linear;
    model.linear_ = fit_least_squares(X, z);
    const double scale = 1.0 + (z.array() - z.mean()).square().mean();
    if (!(model.linear_.residual_variance > 1e-12 * scale)) {
      fail_degenerate("conditional density has zero residual variance");
    }
    model.sd_ = std::sqrt(model.linear_.residual_variance);
    return model;
  }
  if (spec.learner == LearnerKind::stratified_uniform) {
    model.variant_ = CondDensityModel::Variant::stratified_uniform;
    model.cell_columns_ = spec.covariate_indices ? *spec.covariate_indices : all_rows(data.dw());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto cov = row_covariates(data, rows[k]);
      auto key = cell_key(cov, model.cell_columns_);
      auto [it, inserted] = model.cells_.try_emplace(std::move(key), cov.z, cov.z);
      if (!inserted) {
        it->second.first = std::min(it->second.first, cov.z);
        it->second.second = std::max(it->second.second, cov.z);
      }
    }
    if (model.cells_.size() > 64) fail_validation("stratified-uniform density needs discrete W (at most 64 cells)");
    for (const auto& [key, range] : model.cells_) {
      if (!(range.second > range.first)) fail_degenerate("stratified-uniform cell with zero-width support");
    }
    return model;
  }
  fail_validation("continuous Z needs a conditional-gaussian or stratified-uniform fz learner");
}

CondDensityModel fit_cond_density(const std::vector<double>& z, const RowMatrix& W, const LearnerSpec& spec,
                                  double clip_epsilon, ZKindRequest z_kind) {
  const std::size_t n = z.size();
  Dataset data(W, z, std::vector<int>(n, 0), std::vector<double>(n, 0.0), RowMatrix(), z_kind);
  return fit_cond_density(data, all_rows(n), spec, clip_epsilon);
}

NuisanceSet::NuisanceSet(const Dataset& data, std::vector<FoldModels> folds, std::vector<int> fold_of_row,
                         double clip_epsilon)
    : w_(data.w()),
      c_(data.c()),
      folds_(std::move(folds)),
      fold_of_row_(std::move(fold_of_row)),
      clip_epsilon_(clip_epsilon),
      z_discrete_(data.z_discrete()) {
  if (folds_.empty()) fail_validation("nuisance set needs at least one fold");
  if (fold_of_row_.size() != data.n()) fail_validation("fold assignment length must equal n");
  for (int f : fold_of_row_) {
    if (f < 0 || static_cast<std::size_t>(f) >= folds_.size()) fail_validation("fold label out of range");
  }
  for (const auto& m : folds_) {
    if (!m.mu || !m.pi || !m.fz) fail_validation("nuisance set fold is missing an evaluator");
  }
  if (!(clip_epsilon_ > 0.0 && clip_epsilon_ <= 0.1)) fail_validation("clip_epsilon must lie in (0, 0.1]");

  std::map<std::vector<double>, std::size_t> index;
  group_of_row_.resize(n());
  std::vector<double> key;
  for (std::size_t i = 0; i < n(); ++i) {
    key.assign(1, static_cast<double>(fold_of_row_[i]));
    for (Eigen::Index j = 0; j < w_.cols(); ++j) key.push_back(w_(static_cast<Eigen::Index>(i), j));
    for (Eigen::Index j = 0; j < c_.cols(); ++j) key.push_back(c_(static_cast<Eigen::Index>(i), j));
    auto [it, inserted] = index.try_emplace(key, group_rep_.size());
    if (inserted) {
      group_rep_.push_back(i);
      group_weight_.push_back(0.0);
    }
    group_of_row_[i] = it->second;
    group_weight_[it->second] += 1.0;
  }
  for (double& w : group_weight_) w /= static_cast<double>(n());
}

Covariates NuisanceSet::covariates(double x, double z, std::size_t row) const {
  Covariates cov;
  cov.x = x;
  cov.z = z;
  cov.w = w_.row(static_cast<Eigen::Index>(row)).data();
  cov.c = c_.cols() > 0 ? c_.row(static_cast<Eigen::Index>(row)).data() : nullptr;
  return cov;
}

double NuisanceSet::clip_pi(double p) const {
  return std::clamp(p, clip_epsilon_, 1.0 - clip_epsilon_);
}

double NuisanceSet::clip_fz(double f) const {
  f = std::max(f, clip_epsilon_);
  return z_discrete_ ? std::min(f, 1.0 - clip_epsilon_) : f;
}

double NuisanceSet::mu(int x, double z, std::size_t row) const {
  return (*folds_[fold_of_row_[row]].mu)(covariates(x, z, row));
}

double NuisanceSet::pi_raw(double z, std::size_t row) const {
  return (*folds_[fold_of_row_[row]].pi)(covariates(0.0, z, row));
}

double NuisanceSet::pi(int x, double z, std::size_t row) const {
  const double p1 = clip_pi(pi_raw(z, row));
  return x == 1 ? p1 : 1.0 - p1;
}

double NuisanceSet::fz_raw(double z, std::size_t row) const {
  return (*folds_[fold_of_row_[row]].fz)(covariates(0.0, z, row));
}

double NuisanceSet::fz(double z, std::size_t row) const { return clip_fz(fz_raw(z, row)); }

double NuisanceSet::mu_at(int x, double z, const double* w, const double* c) const {
  const Covariates cov{static_cast<double>(x), z, w, c};
  double total = 0.0;
  for (const auto& m : folds_) total += (*m.mu)(cov);
  return total / static_cast<double>(folds_.size());
}

double NuisanceSet::pi_at(int x, double z, const double* w, const double* c) const {
  const Covariates cov{0.0, z, w, c};
  double total = 0.0;
  for (const auto& m : folds_) total += clip_pi((*m.pi)(cov));
  const double p1 = total / static_cast<double>(folds_.size());
  return x == 1 ? p1 : 1.0 - p1;
}

double NuisanceSet::fz_at(double z, const double* w, const double* c) const {
  const Covariates cov{0.0, z, w, c};
  double total = 0.0;
  for (const auto& m : folds_) total += clip_fz((*m.fz)(cov));
  return total / static_cast<double>(folds_.size());
}

std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 1) fail_validation("fold count must be >= 1");
  std::vector<std::size_t> order = all_rows(n);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<int> label(n, 0);
  for (std::size_t k = 0; k < n; ++k) label[order[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  return label;
}

NuisanceSet fit_nuisance_set(const Dataset& data, const NuisanceSpec& spec) {
  validate_nuisance_spec(spec, data);
  const int K = spec.cross_fit_folds;
  std::vector<int> fold_of_row = K == 1 ? std::vector<int>(data.n(), 0) : assign_folds(data.n(), K, spec.fold_seed);
  std::vector<NuisanceSet::FoldModels> folds;
  for (int k = 0; k < K; ++k) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (K == 1 || fold_of_row[i] != k) train.push_back(i);
    }
    NuisanceSet::FoldModels m;
    m.mu = fit_regression(data, train, spec.mu, NuisanceRole::mu);
    if (spec.mu_z_shift != 0.0) {
      m.mu = make_evaluator([base = m.mu, shift = spec.mu_z_shift](const Covariates& c) {
        return (*base)(c) + shift * c.z;
      });
    }
    m.pi = fit_regression(data, train, spec.pi, NuisanceRole::pi);
    m.fz = std::make_shared<DensityEvaluator>(fit_cond_density(data, train, spec.fz, spec.clip_epsilon));
    folds.push_back(std::move(m));
  }
  return NuisanceSet(data, std::move(folds), std::move(fold_of_row), spec.clip_epsilon);
}

}  // namespace napkin
