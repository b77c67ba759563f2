#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "kldetect/error.hpp"
#include "kldetect/flow_table.hpp"
#include "kldetect/numeric.hpp"
#include "kldetect/rng.hpp"

namespace kldetect {

enum class SelectorMethod { InfoGain, LassoL1, FisherScore };

inline const char* selector_method_name(SelectorMethod m) {
  switch (m) {
    case SelectorMethod::InfoGain: return "info_gain";
    case SelectorMethod::LassoL1: return "lasso_l1";
    case SelectorMethod::FisherScore: return "fisher_score";
  }
  return "unknown";
}

/// Per-feature scores from one selector plus the retained subset.
struct FeatureRanking {
  SelectorMethod method = SelectorMethod::InfoGain;
  std::vector<double> scores;    // same order as feature_names
  std::vector<size_t> selected;  // ascending feature indices
  std::string rule;              // human-readable cut rule
  bool converged = true;         // LassoL1 only; others always true
};

// ---------------------------------------------------------------------
// Information Gain

// Equal-width bin on [0,1]; callers feed MinMax-scaled features, values
// outside the range are clamped into the edge bins.
inline int ig_bin(double x, int n_bins) {
  double clamped = std::clamp(x, 0.0, 1.0);
  int b = static_cast<int>(clamped * n_bins);
  return std::min(b, n_bins - 1);
}

inline double entropy2(size_t n0, size_t n1) {
  size_t total = n0 + n1;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (size_t c : {n0, n1}) {
    if (c == 0) continue;
    double p = double(c) / double(total);
    h -= p * std::log2(p);
  }
  return h;
}

// IG_j = H(y) - sum_b p(b) H(y|b), base-2, over equal-width bins.
// Features with IG above the threshold are retained. A single-class label
// vector yields all-zero scores and an empty selection (not an error).
inline FeatureRanking information_gain(const FlowTable& table, int n_bins = 10,
                                       double threshold = 0.1) {
  require(!table.empty(), ErrorCode::EmptyTable, "information_gain on empty table");
  require(n_bins >= 2, ErrorCode::InvalidArgument, "n_bins must be >= 2");

  auto counts = table.class_counts();
  const double h_y = entropy2(counts[0], counts[1]);
  const size_t n = table.n_rows();

  FeatureRanking ranking;
  ranking.method = SelectorMethod::InfoGain;
  ranking.rule = "ig > " + format_double(threshold) + " (bins=" + std::to_string(n_bins) + ")";
  ranking.scores.resize(table.n_features(), 0.0);

  std::vector<size_t> bin_counts(static_cast<size_t>(n_bins) * 2);
  for (size_t j = 0; j < table.n_features(); ++j) {
    std::fill(bin_counts.begin(), bin_counts.end(), size_t{0});
    for (size_t r = 0; r < n; ++r) {
      int b = ig_bin(table.at(r, j), n_bins);
      ++bin_counts[static_cast<size_t>(b) * 2 + static_cast<size_t>(table.labels()[r])];
    }
    double conditional = 0.0;
    for (int b = 0; b < n_bins; ++b) {
      size_t n0 = bin_counts[static_cast<size_t>(b) * 2];
      size_t n1 = bin_counts[static_cast<size_t>(b) * 2 + 1];
      size_t n_bin = n0 + n1;
      if (n_bin == 0) continue;
      conditional += double(n_bin) / double(n) * entropy2(n0, n1);
    }
    ranking.scores[j] = std::max(0.0, h_y - conditional);
    if (ranking.scores[j] > threshold) ranking.selected.push_back(j);
  }
  return ranking;
}

// ---------------------------------------------------------------------
// Lasso (squared loss on {0,1} labels, cyclic coordinate descent)

struct LassoConfig {
  double lambda = 0.01;
  size_t max_iters = 1000;  // full coordinate sweeps
  double tol = 1e-6;
  uint64_t seed = 0;
};

struct LassoFit {
  double intercept = 0.0;
  std::vector<double> coefficients;
  bool converged = false;
  size_t sweeps = 0;
};

// max KKT violation of (1/2n)||y - b0 - Xb||^2 + lambda*||b||_1:
// zero coef:    max(0, |g_j| - lambda)
// nonzero coef: |g_j + lambda*sign(b_j)|
// with g_j = -(1/n) x_j . r and the intercept residual |mean r|.
inline double lasso_kkt_residual(const FlowTable& table, const LassoFit& fit, double lambda) {
  const size_t n = table.n_rows();
  const size_t d = table.n_features();
  std::vector<double> residual(n);
  for (size_t i = 0; i < n; ++i) {
    double pred = fit.intercept;
    for (size_t j = 0; j < d; ++j) pred += table.at(i, j) * fit.coefficients[j];
    residual[i] = double(table.labels()[i]) - pred;
  }
  double worst = std::abs(mean_of(residual));
  for (size_t j = 0; j < d; ++j) {
    KahanSum dot;
    for (size_t i = 0; i < n; ++i) dot.add(table.at(i, j) * residual[i]);
    double g = -dot.value() / double(n);
    double v = fit.coefficients[j] == 0.0 ? std::max(0.0, std::abs(g) - lambda)
                                          : std::abs(g + lambda * (fit.coefficients[j] > 0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

// smallest lambda at which every coefficient shrinks to zero
inline double lasso_full_shrinkage_lambda(const FlowTable& table) {
  const size_t n = table.n_rows();
  double y_mean = 0.0;
  for (int y : table.labels()) y_mean += y;
  y_mean /= double(n);
  double lam = 0.0;
  for (size_t j = 0; j < table.n_features(); ++j) {
    KahanSum dot;
    for (size_t i = 0; i < n; ++i) dot.add(table.at(i, j) * (double(table.labels()[i]) - y_mean));
    lam = std::max(lam, std::abs(dot.value()) / double(n));
  }
  return lam;
}

inline LassoFit lasso_fit(const FlowTable& table, const LassoConfig& config) {
  require(!table.empty(), ErrorCode::EmptyTable, "lasso_fit on empty table");
  require(config.lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be nonnegative");

  const size_t n = table.n_rows();
  const size_t d = table.n_features();

  std::vector<double> col_sq(d, 0.0);
  for (size_t j = 0; j < d; ++j) {
    KahanSum s;
    for (size_t i = 0; i < n; ++i) s.add(table.at(i, j) * table.at(i, j));
    col_sq[j] = s.value() / double(n);
  }

  LassoFit fit;
  fit.coefficients.assign(d, 0.0);
  double y_mean = 0.0;
  for (int y : table.labels()) y_mean += y;
  fit.intercept = y_mean / double(n);

  std::vector<double> residual(n);
  for (size_t i = 0; i < n; ++i) residual[i] = double(table.labels()[i]) - fit.intercept;

  auto soft = [](double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
  };

  for (size_t sweep = 0; sweep < config.max_iters; ++sweep) {
    for (size_t j = 0; j < d; ++j) {
      if (col_sq[j] == 0.0) continue;
      double old = fit.coefficients[j];
      KahanSum dot;
      for (size_t i = 0; i < n; ++i) dot.add(table.at(i, j) * residual[i]);
      double rho = dot.value() / double(n) + col_sq[j] * old;
      double updated = soft(rho, config.lambda) / col_sq[j];
      if (updated != old) {
        double delta = updated - old;
        for (size_t i = 0; i < n; ++i) residual[i] -= delta * table.at(i, j);
        fit.coefficients[j] = updated;
      }
    }
    // re-center the intercept
    double shift = mean_of(residual);
    if (shift != 0.0) {
      fit.intercept += shift;
      for (double& r : residual) r -= shift;
    }
    fit.sweeps = sweep + 1;
    if (lasso_kkt_residual(table, fit, config.lambda) <= config.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

inline FeatureRanking lasso_select(const FlowTable& table, const LassoConfig& config) {
  LassoFit fit = lasso_fit(table, config);
  FeatureRanking ranking;
  ranking.method = SelectorMethod::LassoL1;
  ranking.rule = "coef != 0 (lambda=" + format_double(config.lambda) + ")";
  ranking.converged = fit.converged;
  ranking.scores.resize(table.n_features());
  for (size_t j = 0; j < table.n_features(); ++j) {
    ranking.scores[j] = std::abs(fit.coefficients[j]);
    if (fit.coefficients[j] != 0.0) ranking.selected.push_back(j);
  }
  return ranking;
}

// 5-fold CV over a log-spaced lambda grid; picks the lambda with the best
// mean validation MSE, preferring the sparser (larger) lambda on ties.
inline double choose_lasso_lambda(const FlowTable& table, int k_folds = 5, uint64_t seed = 0,
                                  size_t grid_size = 25) {
  double lam_max = lasso_full_shrinkage_lambda(table);
  if (lam_max <= 0.0) return 0.0;
  std::vector<double> grid;
  for (size_t g = 0; g < grid_size; ++g) {
    double t = double(g) / double(grid_size - 1);
    grid.push_back(lam_max * std::pow(10.0, -4.0 * t));
  }
  auto folds = make_stratified_folds(table.labels(), k_folds, seed);
  double best_mse = std::numeric_limits<double>::infinity();
  double best_lambda = grid.front();
  for (double lam : grid) {
    KahanSum mse_sum;
    size_t n_val = 0;
    for (int f = 0; f < k_folds; ++f) {
      std::vector<size_t> train_rows, val_rows;
      for (size_t r = 0; r < table.n_rows(); ++r) {
        (folds[r] == f ? val_rows : train_rows).push_back(r);
      }
      FlowTable train = table.subset_rows(train_rows);
      LassoFit fit = lasso_fit(train, {lam, 200, 1e-5, seed});
      for (size_t r : val_rows) {
        double pred = fit.intercept;
        for (size_t j = 0; j < table.n_features(); ++j) {
          pred += table.at(r, j) * fit.coefficients[j];
        }
        double err = double(table.labels()[r]) - pred;
        mse_sum.add(err * err);
        ++n_val;
      }
    }
    double mse = mse_sum.value() / double(n_val);
    if (mse < best_mse - 1e-12) {
      best_mse = mse;
      best_lambda = lam;
    }
  }
  return best_lambda;
}

// ---------------------------------------------------------------------
// Fisher Score

// F_j = sum_c n_c (mu_cj - mu_j)^2 / sum_c n_c var_cj with population
// class variances. A vanishing pooled variance is floored at 1e-12 so
// perfectly separating features rank first instead of dividing by zero.
inline FeatureRanking fisher_score(const FlowTable& table, size_t top_k = 47) {
  require(!table.empty(), ErrorCode::EmptyTable, "fisher_score on empty table");
  auto counts = table.class_counts();
  require(counts[0] > 0 && counts[1] > 0, ErrorCode::SingleClass,
          "fisher_score needs both classes present");

  const size_t n = table.n_rows();
  const size_t d = table.n_features();
  FeatureRanking ranking;
  ranking.method = SelectorMethod::FisherScore;
  ranking.scores.resize(d);

  for (size_t j = 0; j < d; ++j) {
    KahanSum total;
    std::array<KahanSum, 2> class_sum;
    for (size_t r = 0; r < n; ++r) {
      double v = table.at(r, j);
      total.add(v);
      class_sum[static_cast<size_t>(table.labels()[r])].add(v);
    }
    double mu = total.value() / double(n);
    double numerator = 0.0;
    double denominator = 0.0;
    for (int cls = 0; cls < 2; ++cls) {
      double n_c = double(counts[static_cast<size_t>(cls)]);
      double mu_c = class_sum[static_cast<size_t>(cls)].value() / n_c;
      KahanSum sq;
      for (size_t r = 0; r < n; ++r) {
        if (table.labels()[r] != cls) continue;
        double dev = table.at(r, j) - mu_c;
        sq.add(dev * dev);
      }
      numerator += n_c * (mu_c - mu) * (mu_c - mu);
      denominator += sq.value();  // n_c * population variance
    }
    if (denominator < 1e-12) denominator = 1e-12;
    ranking.scores[j] = numerator / denominator;
  }

  size_t k = std::min(top_k, d);
  ranking.rule = "top " + std::to_string(k);
  std::vector<size_t> order(d);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (ranking.scores[a] != ranking.scores[b]) return ranking.scores[a] > ranking.scores[b];
    return a < b;
  });
  ranking.selected.assign(order.begin(), order.begin() + k);
  std::sort(ranking.selected.begin(), ranking.selected.end());
  return ranking;
}

// ---------------------------------------------------------------------

inline FlowTable apply_selection(const FlowTable& table, const FeatureRanking& ranking) {
  return table.subset_columns(ranking.selected);
}

}  // namespace kldetect
