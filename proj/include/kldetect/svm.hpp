#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kldetect/learner.hpp"
#include "kldetect/numeric.hpp"
#include "kldetect/rng.hpp"

namespace kldetect {

struct SvmConfig {
  double C = 1.0;
  double gamma = -1.0;  // <= 0 means 1 / n_features
  double tol = 1e-3;
  size_t max_passes = 5;       // consecutive clean sweeps before stopping
  size_t max_updates = 200000;  // hard cap on pair updates
  size_t max_train_rows = 5000;
  bool subsample_to_cap = true;  // false: throw TrainingSetTooLarge instead
  uint64_t seed = 0;
};

namespace detail {

// Platt's sigmoid fit P(y=1|f) = 1/(1+exp(A f + B)) via the
// numerically-stable Newton iteration of Lin, Lu and Weng.
inline void fit_platt_sigmoid(const std::vector<double>& decision, const std::vector<int>& labels,
                              double& a_out, double& b_out) {
  const size_t n = decision.size();
  double prior1 = 0.0;
  for (int y : labels) prior1 += y;
  double prior0 = double(n) - prior1;

  double hi_target = (prior1 + 1.0) / (prior1 + 2.0);
  double lo_target = 1.0 / (prior0 + 2.0);
  std::vector<double> target(n);
  for (size_t i = 0; i < n; ++i) target[i] = labels[i] == 1 ? hi_target : lo_target;

  double a = 0.0;
  double b = std::log((prior0 + 1.0) / (prior1 + 1.0));

  auto objective = [&](double aa, double bb) {
    double obj = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double f_apb = aa * decision[i] + bb;
      if (f_apb >= 0) {
        obj += target[i] * f_apb + std::log1p(std::exp(-f_apb));
      } else {
        obj += (target[i] - 1.0) * f_apb + std::log1p(std::exp(f_apb));
      }
    }
    return obj;
  };

  double fval = objective(a, b);
  const double min_step = 1e-10;
  const double sigma = 1e-12;
  for (int iter = 0; iter < 100; ++iter) {
    double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double f_apb = a * decision[i] + b;
      double p, q;
      if (f_apb >= 0) {
        p = std::exp(-f_apb) / (1.0 + std::exp(-f_apb));
        q = 1.0 / (1.0 + std::exp(-f_apb));
      } else {
        p = 1.0 / (1.0 + std::exp(f_apb));
        q = std::exp(f_apb) / (1.0 + std::exp(f_apb));
      }
      double d2 = p * q;
      h11 += decision[i] * decision[i] * d2;
      h22 += d2;
      h21 += decision[i] * d2;
      double d1 = target[i] - p;
      g1 += decision[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    double det = h11 * h22 - h21 * h21;
    double da = -(h22 * g1 - h21 * g2) / det;
    double db = -(-h21 * g1 + h11 * g2) / det;
    double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= min_step) {
      double new_a = a + step * da;
      double new_b = b + step * db;
      double new_f = objective(new_a, new_b);
      if (new_f < fval + 1e-4 * step * gd) {
        a = new_a;
        b = new_b;
        fval = new_f;
        break;
      }
      step /= 2.0;
    }
    if (step < min_step) break;
  }
  a_out = a;
  b_out = b;
}

}  // namespace detail

/// RBF-kernel SVC trained with a simplified SMO sweep and calibrated with
/// a Platt sigmoid on the training decision values. Training cost is
/// quadratic; tables above max_train_rows are stratified-subsampled (or
/// rejected when subsample_to_cap is off).
class SvmRbfModel : public Learner {
 public:
  SvmRbfModel() = default;

  void fit(const FlowTable& input, const SvmConfig& config) {
    require(!input.empty(), ErrorCode::EmptyTable, "svm needs a nonempty table");
    auto counts = input.class_counts();
    require(counts[0] > 0 && counts[1] > 0, ErrorCode::SingleClass,
            "svm needs both classes present");

    warnings_.clear();
    FlowTable table = input;
    if (input.n_rows() > config.max_train_rows) {
      if (!config.subsample_to_cap) {
        fail(ErrorCode::TrainingSetTooLarge,
             "svm training set has " + std::to_string(input.n_rows()) + " rows, cap is " +
                 std::to_string(config.max_train_rows) + "; subsample first");
      }
      table = stratified_subsample(input, config.max_train_rows, config.seed);
      warnings_.push_back("svm trained on a stratified subsample of " +
                          std::to_string(table.n_rows()) + " rows");
    }

    const size_t n = table.n_rows();
    const size_t d = table.n_features();
    n_features_ = d;
    gamma_ = config.gamma > 0.0 ? config.gamma : 1.0 / double(d);

    std::vector<double> y(n);
    for (size_t i = 0; i < n; ++i) y[i] = table.labels()[i] == 1 ? 1.0 : -1.0;

    std::vector<double> sq_norm(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
      auto row = table.row(i);
      for (double v : row) sq_norm[i] += v * v;
    }

    const bool cache_kernel = n <= 2048;
    std::vector<double> kernel_cache;
    if (cache_kernel) {
      kernel_cache.resize(n * n);
      for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j <= i; ++j) {
          double k = kernel_value(table.row(i), table.row(j), sq_norm[i], sq_norm[j]);
          kernel_cache[i * n + j] = k;
          kernel_cache[j * n + i] = k;
        }
      }
    }
    std::vector<double> row_i(n), row_j(n);
    auto kernel_row = [&](size_t i, std::vector<double>& buf) -> const double* {
      if (cache_kernel) return kernel_cache.data() + i * n;
      for (size_t p = 0; p < n; ++p) {
        buf[p] = kernel_value(table.row(i), table.row(p), sq_norm[i], sq_norm[p]);
      }
      return buf.data();
    };

    std::vector<double> alpha(n, 0.0);
    std::vector<double> errors(n);
    for (size_t i = 0; i < n; ++i) errors[i] = -y[i];  // f = 0 initially
    bias_ = 0.0;

    Rng rng = Rng::derive(config.seed, "smo");
    size_t updates = 0;
    size_t clean_passes = 0;
    converged_ = false;
    while (clean_passes < config.max_passes && updates < config.max_updates) {
      size_t changed = 0;
      for (size_t i = 0; i < n; ++i) {
        double r_i = errors[i] * y[i];
        bool violates = (r_i < -config.tol && alpha[i] < config.C) ||
                        (r_i > config.tol && alpha[i] > 0.0);
        if (!violates) continue;

        // second-choice heuristic: maximize |E_i - E_j|, ties to low index
        size_t j = n;
        double best_gap = -1.0;
        for (size_t p = 0; p < n; ++p) {
          if (p == i) continue;
          double gap = std::abs(errors[i] - errors[p]);
          if (gap > best_gap) {
            best_gap = gap;
            j = p;
          }
        }
        if (j == n) continue;

        if (!try_update(i, j, table, y, alpha, errors, kernel_row, row_i, row_j, config)) {
          // fall back to a seeded scan from a random offset
          size_t start = rng.uniform_index(n);
          bool done = false;
          for (size_t off = 0; off < n && !done; ++off) {
            size_t cand = (start + off) % n;
            if (cand == i) continue;
            done = try_update(i, cand, table, y, alpha, errors, kernel_row, row_i, row_j,
                              config);
          }
          if (!done) continue;
        }
        ++changed;
        if (++updates >= config.max_updates) break;
      }
      clean_passes = changed == 0 ? clean_passes + 1 : 0;
    }
    // a clean sweep means no KKT violation beyond tol remains
    converged_ = clean_passes >= config.max_passes;
    if (!converged_) {
      warnings_.push_back("smo update cap reached before KKT tolerance; best iterate kept");
    }

    // fold alpha*y into stored support vectors
    training_alphas_ = alpha;
    support_coef_.clear();
    support_vectors_.clear();
    for (size_t i = 0; i < n; ++i) {
      if (alpha[i] > 0.0) {
        support_coef_.push_back(alpha[i] * y[i]);
        auto row = table.row(i);
        support_vectors_.insert(support_vectors_.end(), row.begin(), row.end());
      }
    }

    // recompute decision values from the folded coefficients so Platt
    // scaling does not inherit incremental-update drift
    std::vector<double> decision(n);
    for (size_t i = 0; i < n; ++i) decision[i] = decision_value(table.row(i));
    detail::fit_platt_sigmoid(decision, table.labels(), platt_a_, platt_b_);
  }

  double decision_value(std::span<const double> x) const {
    double sq_x = 0.0;
    for (double v : x) sq_x += v * v;
    double f = bias_;
    const size_t n_sv = support_coef_.size();
    for (size_t s = 0; s < n_sv; ++s) {
      const double* sv = support_vectors_.data() + s * n_features_;
      double sq_sv = 0.0;
      double dot = 0.0;
      for (size_t j = 0; j < n_features_; ++j) {
        sq_sv += sv[j] * sv[j];
        dot += sv[j] * x[j];
      }
      f += support_coef_[s] * std::exp(-gamma_ * (sq_x + sq_sv - 2.0 * dot));
    }
    return f;
  }

  double predict_proba_row(std::span<const double> x) const override {
    check_width(x.size());
    double f = decision_value(x);
    return 1.0 / (1.0 + std::exp(platt_a_ * f + platt_b_));
  }

  std::string kind() const override { return "svm_rbf"; }
  size_t n_features() const override { return n_features_; }
  bool converged() const override { return converged_; }
  std::vector<std::string> warnings() const override { return warnings_; }

  double gamma() const { return gamma_; }
  double bias() const { return bias_; }
  const std::vector<double>& training_alphas() const { return training_alphas_; }
  size_t n_support_vectors() const { return support_coef_.size(); }

  json save_state() const override {
    return {{"n_features", n_features_},
            {"gamma", gamma_},
            {"bias", bias_},
            {"platt_a", platt_a_},
            {"platt_b", platt_b_},
            {"support_coef", support_coef_},
            {"support_vectors", support_vectors_}};
  }

  void load_state(const json& state) {
    n_features_ = state.at("n_features").get<size_t>();
    gamma_ = state.at("gamma").get<double>();
    bias_ = state.at("bias").get<double>();
    platt_a_ = state.at("platt_a").get<double>();
    platt_b_ = state.at("platt_b").get<double>();
    support_coef_ = state.at("support_coef").get<std::vector<double>>();
    support_vectors_ = state.at("support_vectors").get<std::vector<double>>();
  }

 private:
  double kernel_value(std::span<const double> a, std::span<const double> b, double sq_a,
                      double sq_b) const {
    double dot = 0.0;
    for (size_t j = 0; j < a.size(); ++j) dot += a[j] * b[j];
    return std::exp(-gamma_ * (sq_a + sq_b - 2.0 * dot));
  }

  template <typename KernelRow>
  bool try_update(size_t i, size_t j, const FlowTable& table, const std::vector<double>& y,
                  std::vector<double>& alpha, std::vector<double>& errors, KernelRow&& kernel_row,
                  std::vector<double>& buf_i, std::vector<double>& buf_j,
                  const SvmConfig& config) {
    (void)table;
    const double* k_i = kernel_row(i, buf_i);
    const double k_ii = k_i[i];
    const double k_ij = k_i[j];
    const double* k_j = kernel_row(j, buf_j);
    const double k_jj = k_j[j];

    double eta = 2.0 * k_ij - k_ii - k_jj;
    if (eta >= -1e-12) return false;

    double lo, hi;
    if (y[i] != y[j]) {
      lo = std::max(0.0, alpha[j] - alpha[i]);
      hi = std::min(config.C, config.C + alpha[j] - alpha[i]);
    } else {
      lo = std::max(0.0, alpha[i] + alpha[j] - config.C);
      hi = std::min(config.C, alpha[i] + alpha[j]);
    }
    if (lo >= hi) return false;

    double alpha_j_new = alpha[j] - y[j] * (errors[i] - errors[j]) / eta;
    alpha_j_new = std::clamp(alpha_j_new, lo, hi);
    double delta_j = alpha_j_new - alpha[j];
    if (std::abs(delta_j) < 1e-10) return false;

    double alpha_i_new = alpha[i] + y[i] * y[j] * (alpha[j] - alpha_j_new);
    double delta_i = alpha_i_new - alpha[i];

    double b1 = bias_ - errors[i] - y[i] * delta_i * k_ii - y[j] * delta_j * k_ij;
    double b2 = bias_ - errors[j] - y[i] * delta_i * k_ij - y[j] * delta_j * k_jj;
    double new_bias;
    if (alpha_i_new > 0.0 && alpha_i_new < config.C) new_bias = b1;
    else if (alpha_j_new > 0.0 && alpha_j_new < config.C) new_bias = b2;
    else new_bias = 0.5 * (b1 + b2);
    double delta_b = new_bias - bias_;

    alpha[i] = alpha_i_new;
    alpha[j] = alpha_j_new;
    bias_ = new_bias;
    const size_t n = errors.size();
    for (size_t p = 0; p < n; ++p) {
      errors[p] += y[i] * delta_i * k_i[p] + y[j] * delta_j * k_j[p] + delta_b;
    }
    return true;
  }

  std::vector<double> support_vectors_;  // row-major
  std::vector<double> support_coef_;     // alpha_i * y_i
  std::vector<double> training_alphas_;
  double bias_ = 0.0;
  double gamma_ = 1.0;
  double platt_a_ = -1.0;
  double platt_b_ = 0.0;
  bool converged_ = false;
  std::vector<std::string> warnings_;
  size_t n_features_ = 0;
};

inline LearnerPtr train_svm_rbf(const FlowTable& table, const SvmConfig& config = {}) {
  auto model = std::make_unique<SvmRbfModel>();
  model->fit(table, config);
  return model;
}

}  // namespace kldetect
