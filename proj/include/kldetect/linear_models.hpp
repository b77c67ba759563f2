#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kldetect/learner.hpp"
#include "kldetect/numeric.hpp"

namespace kldetect {

struct LogisticRegressionConfig {
  double l2 = 0.0;
  size_t max_iters = 100;  // Newton steps
  double tol = 1e-8;       // infinity norm of the gradient
};

// mean negative log-likelihood plus 0.5*l2*||w||^2 (intercept unpenalized)
inline double logistic_loss(const FlowTable& table, double intercept,
                            std::span<const double> weights, double l2) {
  KahanSum loss;
  for (size_t i = 0; i < table.n_rows(); ++i) {
    double z = intercept;
    auto x = table.row(i);
    for (size_t j = 0; j < x.size(); ++j) z += weights[j] * x[j];
    double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss.add(softplus - double(table.labels()[i]) * z);
  }
  double total = loss.value() / double(table.n_rows());
  for (double w : weights) total += 0.5 * l2 * w * w;
  return total;
}

// gradient of logistic_loss; element 0 is the intercept, then one entry
// per feature weight
inline std::vector<double> logistic_gradient(const FlowTable& table, double intercept,
                                             std::span<const double> weights, double l2) {
  const size_t d = table.n_features();
  std::vector<KahanSum> sums(d + 1);
  for (size_t i = 0; i < table.n_rows(); ++i) {
    double z = intercept;
    auto x = table.row(i);
    for (size_t j = 0; j < d; ++j) z += weights[j] * x[j];
    double err = sigmoid(z) - double(table.labels()[i]);
    sums[0].add(err);
    for (size_t j = 0; j < d; ++j) sums[j + 1].add(err * x[j]);
  }
  std::vector<double> grad(d + 1);
  for (size_t j = 0; j <= d; ++j) grad[j] = sums[j].value() / double(table.n_rows());
  for (size_t j = 0; j < d; ++j) grad[j + 1] += l2 * weights[j];
  return grad;
}

/// Binomial logistic regression fitted by damped Newton iterations.
/// Perfect separation with l2 = 0 is detected (saturated margins) and
/// reported as non-convergence rather than silently accepted.
class LogisticRegressionModel : public Learner {
 public:
  LogisticRegressionModel() = default;

  void fit(const FlowTable& table, const LogisticRegressionConfig& config) {
    require(!table.empty(), ErrorCode::EmptyTable, "logistic regression needs a nonempty table");
    n_features_ = table.n_features();
    weights_.assign(n_features_, 0.0);
    intercept_ = 0.0;
    converged_ = false;
    warnings_.clear();

    const size_t n = table.n_rows();
    const size_t d = n_features_;
    const size_t dim = d + 1;  // intercept first

    double loss = logistic_loss(table, intercept_, weights_, config.l2);
    for (size_t iter = 0; iter < config.max_iters; ++iter) {
      auto grad = logistic_gradient(table, intercept_, weights_, config.l2);
      double grad_norm = 0.0;
      for (double g : grad) grad_norm = std::max(grad_norm, std::abs(g));
      if (grad_norm <= config.tol) {
        converged_ = true;
        break;
      }

      // Newton system: (X^T W X / n + l2*I) step = grad, intercept included
      std::vector<double> hess(dim * dim, 0.0);
      for (size_t i = 0; i < n; ++i) {
        double z = intercept_;
        auto x = table.row(i);
        for (size_t j = 0; j < d; ++j) z += weights_[j] * x[j];
        double p = sigmoid(z);
        double w = p * (1.0 - p);
        // xt = [1, x...]
        hess[0] += w;
        for (size_t a = 0; a < d; ++a) {
          hess[(a + 1) * dim] += w * x[a];
          for (size_t b = 0; b <= a; ++b) hess[(a + 1) * dim + (b + 1)] += w * x[a] * x[b];
        }
      }
      for (size_t a = 0; a < dim; ++a) {
        for (size_t b = 0; b < a; ++b) hess[b * dim + a] = hess[a * dim + b];
      }
      for (auto& h : hess) h /= double(n);
      for (size_t j = 1; j < dim; ++j) hess[j * dim + j] += config.l2;

      std::vector<double> step = solve_spd(hess, grad, dim);

      // halve the step until the loss stops increasing
      double scale = 1.0;
      double new_loss = loss;
      double new_intercept = intercept_;
      std::vector<double> new_weights = weights_;
      for (int halving = 0; halving < 30; ++halving) {
        new_intercept = intercept_ - scale * step[0];
        for (size_t j = 0; j < d; ++j) new_weights[j] = weights_[j] - scale * step[j + 1];
        new_loss = logistic_loss(table, new_intercept, new_weights, config.l2);
        if (new_loss <= loss + 1e-15) break;
        scale *= 0.5;
      }
      intercept_ = new_intercept;
      weights_ = new_weights;
      if (std::abs(new_loss - loss) < 1e-15 && new_loss <= loss) {
        // stalled; final convergence is decided by the gradient check below
        loss = new_loss;
        auto g = logistic_gradient(table, intercept_, weights_, config.l2);
        double gn = 0.0;
        for (double v : g) gn = std::max(gn, std::abs(v));
        converged_ = gn <= config.tol;
        break;
      }
      loss = new_loss;
    }

    if (config.l2 == 0.0) {
      // saturated margins on every row mean the likelihood is unbounded
      double min_abs_margin = std::numeric_limits<double>::infinity();
      bool all_correct = true;
      for (size_t i = 0; i < n; ++i) {
        double z = intercept_;
        auto x = table.row(i);
        for (size_t j = 0; j < d; ++j) z += weights_[j] * x[j];
        min_abs_margin = std::min(min_abs_margin, std::abs(z));
        if ((z > 0 ? 1 : 0) != table.labels()[i]) all_correct = false;
      }
      if (all_correct && min_abs_margin > 10.0) {
        converged_ = false;
        warnings_.push_back(
            "perfect separation detected: weights diverge without regularization");
      }
    }
    if (!converged_ && warnings_.empty()) {
      warnings_.push_back("newton solver did not reach tolerance; best iterate returned");
    }
  }

  double predict_proba_row(std::span<const double> x) const override {
    check_width(x.size());
    double z = intercept_;
    for (size_t j = 0; j < x.size(); ++j) z += weights_[j] * x[j];
    return sigmoid(z);
  }

  std::string kind() const override { return "logistic_regression"; }
  size_t n_features() const override { return n_features_; }
  bool converged() const override { return converged_; }
  std::vector<std::string> warnings() const override { return warnings_; }

  double intercept() const { return intercept_; }
  const std::vector<double>& weights() const { return weights_; }

  json save_state() const override {
    return {{"n_features", n_features_},
            {"intercept", intercept_},
            {"weights", weights_},
            {"converged", converged_}};
  }

  void load_state(const json& state) {
    n_features_ = state.at("n_features").get<size_t>();
    intercept_ = state.at("intercept").get<double>();
    weights_ = state.at("weights").get<std::vector<double>>();
    converged_ = state.at("converged").get<bool>();
  }

 private:
  std::vector<double> weights_;
  double intercept_ = 0.0;
  bool converged_ = false;
  std::vector<std::string> warnings_;
  size_t n_features_ = 0;
};

inline LearnerPtr train_logistic_regression(const FlowTable& table,
                                            const LogisticRegressionConfig& config = {}) {
  auto model = std::make_unique<LogisticRegressionModel>();
  model->fit(table, config);
  return model;
}

// ---------------------------------------------------------------------

struct NaiveBayesConfig {
  double variance_floor = 1e-9;
};

/// Gaussian naive Bayes with a variance floor and log-space posterior.
class NaiveBayesModel : public Learner {
 public:
  NaiveBayesModel() = default;

  void fit(const FlowTable& table, const NaiveBayesConfig& config = {}) {
    require(!table.empty(), ErrorCode::EmptyTable, "naive bayes needs a nonempty table");
    auto counts = table.class_counts();
    require(counts[0] > 0 && counts[1] > 0, ErrorCode::SingleClass,
            "naive bayes needs both classes present");

    n_features_ = table.n_features();
    const size_t d = n_features_;
    for (int cls = 0; cls < 2; ++cls) {
      auto c = static_cast<size_t>(cls);
      means_[c].assign(d, 0.0);
      vars_[c].assign(d, 0.0);
      double n_c = double(counts[c]);
      log_prior_[c] = std::log(n_c / double(table.n_rows()));
      for (size_t r = 0; r < table.n_rows(); ++r) {
        if (table.labels()[r] != cls) continue;
        for (size_t j = 0; j < d; ++j) means_[c][j] += table.at(r, j);
      }
      for (size_t j = 0; j < d; ++j) means_[c][j] /= n_c;
      for (size_t r = 0; r < table.n_rows(); ++r) {
        if (table.labels()[r] != cls) continue;
        for (size_t j = 0; j < d; ++j) {
          double dev = table.at(r, j) - means_[c][j];
          vars_[c][j] += dev * dev;
        }
      }
      for (size_t j = 0; j < d; ++j) {
        vars_[c][j] = std::max(vars_[c][j] / n_c, config.variance_floor);
      }
    }
  }

  double predict_proba_row(std::span<const double> x) const override {
    check_width(x.size());
    double log_post[2];
    for (int cls = 0; cls < 2; ++cls) {
      auto c = static_cast<size_t>(cls);
      double lp = log_prior_[c];
      for (size_t j = 0; j < n_features_; ++j) {
        double dev = x[j] - means_[c][j];
        lp += -0.5 * std::log(2.0 * 3.14159265358979323846 * vars_[c][j]) -
              dev * dev / (2.0 * vars_[c][j]);
      }
      log_post[cls] = lp;
    }
    double m = std::max(log_post[0], log_post[1]);
    double e0 = std::exp(log_post[0] - m);
    double e1 = std::exp(log_post[1] - m);
    return e1 / (e0 + e1);
  }

  std::string kind() const override { return "naive_bayes"; }
  size_t n_features() const override { return n_features_; }

  json save_state() const override {
    return {{"n_features", n_features_},
            {"log_prior", {log_prior_[0], log_prior_[1]}},
            {"means", {means_[0], means_[1]}},
            {"vars", {vars_[0], vars_[1]}}};
  }

  void load_state(const json& state) {
    n_features_ = state.at("n_features").get<size_t>();
    log_prior_[0] = state.at("log_prior").at(0).get<double>();
    log_prior_[1] = state.at("log_prior").at(1).get<double>();
    for (int c = 0; c < 2; ++c) {
      means_[c] = state.at("means").at(c).get<std::vector<double>>();
      vars_[c] = state.at("vars").at(c).get<std::vector<double>>();
    }
  }

 private:
  std::vector<double> means_[2];
  std::vector<double> vars_[2];
  double log_prior_[2] = {0.0, 0.0};
  size_t n_features_ = 0;
};

inline LearnerPtr train_naive_bayes(const FlowTable& table, const NaiveBayesConfig& config = {}) {
  auto model = std::make_unique<NaiveBayesModel>();
  model->fit(table, config);
  return model;
}

}  // namespace kldetect
