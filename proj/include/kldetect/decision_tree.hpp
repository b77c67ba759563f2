#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "kldetect/learner.hpp"
#include "kldetect/rng.hpp"

namespace kldetect {

struct DecisionTreeConfig {
  int max_depth = 10;
  size_t min_samples_leaf = 5;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double p1 = 0.0;       // leaf probability of class 1
  double weight0 = 0.0;  // (weighted) class counts at this node
  double weight1 = 0.0;
  size_t n_samples = 0;
};

namespace detail {

inline double gini(double w0, double w1) {
  double total = w0 + w1;
  if (total <= 0.0) return 0.0;
  double p0 = w0 / total;
  double p1 = w1 / total;
  return 1.0 - p0 * p0 - p1 * p1;
}

struct SplitCandidate {
  size_t feature = 0;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
  bool valid = false;
};

// exhaustive best weighted-Gini split over the given features; candidate
// thresholds are midpoints between consecutive distinct values. Ties keep
// the first candidate, i.e. lowest feature index then lowest threshold.
inline SplitCandidate best_split(const FlowTable& table, const std::vector<double>& weights,
                                 const std::vector<size_t>& rows,
                                 const std::vector<size_t>& features,
                                 size_t min_samples_leaf) {
  SplitCandidate best;
  std::vector<std::pair<double, size_t>> ordered(rows.size());
  for (size_t f : features) {
    for (size_t i = 0; i < rows.size(); ++i) ordered[i] = {table.at(rows[i], f), rows[i]};
    std::sort(ordered.begin(), ordered.end());

    double left_w0 = 0.0, left_w1 = 0.0;
    double total_w0 = 0.0, total_w1 = 0.0;
    for (auto [v, r] : ordered) {
      (table.labels()[r] == 0 ? total_w0 : total_w1) += weights[r];
    }
    double total = total_w0 + total_w1;

    for (size_t i = 0; i + 1 < ordered.size(); ++i) {
      size_t r = ordered[i].second;
      (table.labels()[r] == 0 ? left_w0 : left_w1) += weights[r];
      if (ordered[i].first == ordered[i + 1].first) continue;
      size_t n_left = i + 1;
      size_t n_right = ordered.size() - n_left;
      if (n_left < min_samples_leaf || n_right < min_samples_leaf) continue;
      double right_w0 = total_w0 - left_w0;
      double right_w1 = total_w1 - left_w1;
      double wl = left_w0 + left_w1;
      double wr = right_w0 + right_w1;
      double impurity = (wl * gini(left_w0, left_w1) + wr * gini(right_w0, right_w1)) / total;
      if (impurity < best.impurity - 1e-15) {
        best.impurity = impurity;
        best.feature = f;
        best.threshold = 0.5 * (ordered[i].first + ordered[i + 1].first);
        best.valid = true;
      }
    }
  }
  return best;
}

}  // namespace detail

/// Greedy CART classifier with the Gini criterion. Supports per-sample
/// weights (used by AdaBoost) and per-split feature subsampling (used by
/// the random forest).
class DecisionTreeModel : public Learner {
 public:
  DecisionTreeModel() = default;

  // feature_picker returns the features to consider at one split; null
  // means all features in ascending order. root_rows may be a multiset
  // (bootstrap duplicates count toward leaf sizes).
  void fit(const FlowTable& table, const DecisionTreeConfig& config,
           const std::vector<double>* sample_weights = nullptr,
           const std::function<std::vector<size_t>()>* feature_picker = nullptr,
           const std::vector<size_t>* root_rows = nullptr) {
    require(!table.empty(), ErrorCode::EmptyTable, "decision tree needs a nonempty table");
    n_features_ = table.n_features();
    nodes_.clear();

    std::vector<double> weights;
    if (sample_weights) {
      require(sample_weights->size() == table.n_rows(), ErrorCode::DimensionMismatch,
              "sample weight length mismatch");
      weights = *sample_weights;
    } else {
      weights.assign(table.n_rows(), 1.0);
    }

    std::vector<size_t> all_features(table.n_features());
    std::iota(all_features.begin(), all_features.end(), size_t{0});

    std::vector<size_t> rows;
    if (root_rows) {
      rows = *root_rows;
      require(!rows.empty(), ErrorCode::EmptyTable, "decision tree got an empty row set");
    } else {
      rows.resize(table.n_rows());
      std::iota(rows.begin(), rows.end(), size_t{0});
    }
    build(table, config, weights, all_features, feature_picker, std::move(rows), 0);
  }

  double predict_proba_row(std::span<const double> x) const override {
    check_width(x.size());
    int node = 0;
    while (nodes_[static_cast<size_t>(node)].feature >= 0) {
      const TreeNode& n = nodes_[static_cast<size_t>(node)];
      node = x[static_cast<size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<size_t>(node)].p1;
  }

  std::string kind() const override { return "decision_tree"; }
  size_t n_features() const override { return n_features_; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const { return depth_of(0); }

  json save_state() const override {
    json nodes = json::array();
    for (const auto& n : nodes_) {
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.p1, n.weight0, n.weight1,
                       n.n_samples});
    }
    return {{"n_features", n_features_}, {"nodes", nodes}};
  }

  void load_state(const json& state) {
    n_features_ = state.at("n_features").get<size_t>();
    nodes_.clear();
    for (const auto& n : state.at("nodes")) {
      TreeNode node;
      node.feature = n.at(0).get<int>();
      node.threshold = n.at(1).get<double>();
      node.left = n.at(2).get<int>();
      node.right = n.at(3).get<int>();
      node.p1 = n.at(4).get<double>();
      node.weight0 = n.at(5).get<double>();
      node.weight1 = n.at(6).get<double>();
      node.n_samples = n.at(7).get<size_t>();
      nodes_.push_back(node);
    }
  }

 private:
  int build(const FlowTable& table, const DecisionTreeConfig& config,
            const std::vector<double>& weights, const std::vector<size_t>& all_features,
            const std::function<std::vector<size_t>()>* feature_picker,
            std::vector<size_t> rows, int depth) {
    TreeNode node;
    node.n_samples = rows.size();
    for (size_t r : rows) {
      (table.labels()[r] == 0 ? node.weight0 : node.weight1) += weights[r];
    }
    double total = node.weight0 + node.weight1;
    node.p1 = total > 0.0 ? node.weight1 / total : 0.0;

    bool pure = node.weight0 == 0.0 || node.weight1 == 0.0;
    bool can_split = !pure && depth < config.max_depth &&
                     rows.size() >= 2 * config.min_samples_leaf;

    detail::SplitCandidate split;
    if (can_split) {
      std::vector<size_t> features =
          feature_picker ? (*feature_picker)() : all_features;
      split = detail::best_split(table, weights, rows, features, config.min_samples_leaf);
    }

    int index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (!can_split || !split.valid) return index;

    std::vector<size_t> left_rows, right_rows;
    for (size_t r : rows) {
      (table.at(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[static_cast<size_t>(index)].feature = static_cast<int>(split.feature);
    nodes_[static_cast<size_t>(index)].threshold = split.threshold;
    int left = build(table, config, weights, all_features, feature_picker,
                     std::move(left_rows), depth + 1);
    nodes_[static_cast<size_t>(index)].left = left;
    int right = build(table, config, weights, all_features, feature_picker,
                      std::move(right_rows), depth + 1);
    nodes_[static_cast<size_t>(index)].right = right;
    return index;
  }

  int depth_of(int node) const {
    const TreeNode& n = nodes_[static_cast<size_t>(node)];
    if (n.feature < 0) return 0;
    return 1 + std::max(depth_of(n.left), depth_of(n.right));
  }

  std::vector<TreeNode> nodes_;
  size_t n_features_ = 0;
};

inline LearnerPtr train_decision_tree(const FlowTable& table,
                                      const DecisionTreeConfig& config = {}) {
  auto model = std::make_unique<DecisionTreeModel>();
  model->fit(table, config);
  return model;
}

}  // namespace kldetect
