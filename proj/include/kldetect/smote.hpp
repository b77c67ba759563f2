#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "kldetect/error.hpp"
#include "kldetect/flow_table.hpp"
#include "kldetect/rng.hpp"

namespace kldetect {

struct SmoteConfig {
  size_t k_neighbors = 5;
  double target_ratio = 1.0;  // minority/majority count after resampling
  uint64_t seed = 0;
};

struct SmoteInfo {
  size_t k_used = 0;
  bool k_clamped = false;
  size_t n_synthetic = 0;
  int minority_class = 1;
};

namespace detail {

// exact k nearest minority neighbors of row i (self excluded), ties
// broken by ascending row index
inline std::vector<size_t> k_nearest(const std::vector<double>& points, size_t n, size_t dim,
                                     size_t i, size_t k) {
  std::vector<std::pair<double, size_t>> dist;
  dist.reserve(n - 1);
  const double* xi = points.data() + i * dim;
  for (size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    const double* xj = points.data() + j * dim;
    double d2 = 0.0;
    for (size_t c = 0; c < dim; ++c) {
      double diff = xi[c] - xj[c];
      d2 += diff * diff;
    }
    dist.emplace_back(d2, j);
  }
  size_t take = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
  std::vector<size_t> out(take);
  for (size_t t = 0; t < take; ++t) out[t] = dist[t].second;
  return out;
}

}  // namespace detail

// SMOTE oversampling of the training partition: synthetic minority rows
// are convex combinations x_i + lambda * (x_nn - x_i) of a minority row
// and one of its k nearest minority neighbors. Majority rows pass through
// untouched. Distances are computed on the features as given, so scale
// before resampling.
inline FlowTable smote(const FlowTable& train, const SmoteConfig& config,
                       SmoteInfo* info_out = nullptr) {
  require(config.k_neighbors >= 1, ErrorCode::InvalidArgument, "k_neighbors must be >= 1");
  require(config.target_ratio > 0.0 && config.target_ratio <= 1.0, ErrorCode::InvalidArgument,
          "target_ratio must lie in (0,1]");

  auto counts = train.class_counts();
  int minority = counts[1] <= counts[0] ? 1 : 0;
  size_t n_min = counts[static_cast<size_t>(minority)];
  size_t n_maj = counts[static_cast<size_t>(1 - minority)];
  require(n_min >= 2, ErrorCode::MinorityTooSmall,
          "SMOTE needs >= 2 minority rows, found " + std::to_string(n_min));

  SmoteInfo info;
  info.minority_class = minority;
  info.k_used = std::min(config.k_neighbors, n_min - 1);
  info.k_clamped = info.k_used != config.k_neighbors;

  auto target = static_cast<size_t>(std::llround(config.target_ratio * double(n_maj)));
  size_t n_synthetic = target > n_min ? target - n_min : 0;
  info.n_synthetic = n_synthetic;

  std::vector<size_t> minority_rows;
  for (size_t r = 0; r < train.n_rows(); ++r) {
    if (train.labels()[r] == minority) minority_rows.push_back(r);
  }
  const size_t dim = train.n_features();
  std::vector<double> minority_points;
  minority_points.reserve(minority_rows.size() * dim);
  for (size_t r : minority_rows) {
    auto row = train.row(r);
    minority_points.insert(minority_points.end(), row.begin(), row.end());
  }

  // spread the synthetic quota evenly over minority rows
  std::vector<size_t> quota(n_min, n_synthetic / n_min);
  for (size_t i = 0; i < n_synthetic % n_min; ++i) ++quota[i];

  std::vector<double> features = train.features();
  std::vector<int> labels = train.labels();
  features.reserve((train.n_rows() + n_synthetic) * dim);
  labels.reserve(train.n_rows() + n_synthetic);

  for (size_t i = 0; i < n_min; ++i) {
    if (quota[i] == 0) continue;
    auto neighbors = detail::k_nearest(minority_points, n_min, dim, i, info.k_used);
    // per-row stream keyed by (seed, row); insensitive to evaluation order
    Rng rng = Rng::derive(config.seed, "smote", i);
    for (size_t q = 0; q < quota[i]; ++q) {
      size_t nn = neighbors[rng.uniform_index(neighbors.size())];
      double lambda = rng.uniform();
      const double* a = minority_points.data() + i * dim;
      const double* b = minority_points.data() + nn * dim;
      for (size_t c = 0; c < dim; ++c) features.push_back(a[c] + lambda * (b[c] - a[c]));
      labels.push_back(minority);
    }
  }

  if (info_out) *info_out = info;
  return FlowTable(train.feature_names(), std::move(features), std::move(labels));
}

}  // namespace kldetect
