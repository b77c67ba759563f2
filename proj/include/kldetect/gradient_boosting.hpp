#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "kldetect/learner.hpp"
#include "kldetect/numeric.hpp"

namespace kldetect {

enum class GbLoss { Logistic, Squared };

struct GradientBoostingConfig {
  size_t n_rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 6;
  double l2 = 1.0;
  GbLoss loss = GbLoss::Logistic;
  uint64_t seed = 0;  // interface uniformity; training is deterministic
};

// logistic loss on margins: l(m, y) = log(1 + exp(m)) - y*m
inline double gb_logistic_loss(double margin, int y) {
  double softplus = margin > 0 ? margin + std::log1p(std::exp(-margin))
                               : std::log1p(std::exp(margin));
  return softplus - double(y) * margin;
}

inline double gb_logistic_gradient(double margin, int y) { return sigmoid(margin) - double(y); }

inline double gb_logistic_hessian(double margin) {
  double p = sigmoid(margin);
  return p * (1.0 - p);
}

namespace detail {

struct GbNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output before learning rate
};

// regression tree on (gradient, hessian) statistics; leaf value is
// -G/(H + l2), split gain the usual second-order criterion
class GbTree {
 public:
  void fit(const FlowTable& table, const std::vector<double>& grad,
           const std::vector<double>& hess, int max_depth, double l2) {
    nodes_.clear();
    std::vector<size_t> rows(table.n_rows());
    std::iota(rows.begin(), rows.end(), size_t{0});
    build(table, grad, hess, std::move(rows), max_depth, l2);
  }

  double value_for(std::span<const double> x) const {
    int node = 0;
    while (nodes_[static_cast<size_t>(node)].feature >= 0) {
      const GbNode& n = nodes_[static_cast<size_t>(node)];
      node = x[static_cast<size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<size_t>(node)].value;
  }

  const std::vector<GbNode>& nodes() const { return nodes_; }
  std::vector<GbNode>& nodes() { return nodes_; }

 private:
  int build(const FlowTable& table, const std::vector<double>& grad,
            const std::vector<double>& hess, std::vector<size_t> rows, int depth_left,
            double l2) {
    double g_total = 0.0, h_total = 0.0;
    for (size_t r : rows) {
      g_total += grad[r];
      h_total += hess[r];
    }

    GbNode node;
    node.value = -g_total / (h_total + l2);

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 1e-12;
    if (depth_left > 0 && rows.size() >= 2) {
      double parent_score = g_total * g_total / (h_total + l2);
      std::vector<std::pair<double, size_t>> ordered(rows.size());
      for (size_t f = 0; f < table.n_features(); ++f) {
        for (size_t i = 0; i < rows.size(); ++i) ordered[i] = {table.at(rows[i], f), rows[i]};
        std::sort(ordered.begin(), ordered.end());
        double g_left = 0.0, h_left = 0.0;
        for (size_t i = 0; i + 1 < ordered.size(); ++i) {
          size_t r = ordered[i].second;
          g_left += grad[r];
          h_left += hess[r];
          if (ordered[i].first == ordered[i + 1].first) continue;
          double g_right = g_total - g_left;
          double h_right = h_total - h_left;
          double gain = 0.5 * (g_left * g_left / (h_left + l2) +
                               g_right * g_right / (h_right + l2) - parent_score);
          if (gain > best_gain + 1e-15) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_threshold = 0.5 * (ordered[i].first + ordered[i + 1].first);
          }
        }
      }
    }

    int index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (best_feature < 0) return index;

    std::vector<size_t> left_rows, right_rows;
    for (size_t r : rows) {
      (table.at(r, static_cast<size_t>(best_feature)) <= best_threshold ? left_rows
                                                                        : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[static_cast<size_t>(index)].feature = best_feature;
    nodes_[static_cast<size_t>(index)].threshold = best_threshold;
    int left = build(table, grad, hess, std::move(left_rows), depth_left - 1, l2);
    nodes_[static_cast<size_t>(index)].left = left;
    int right = build(table, grad, hess, std::move(right_rows), depth_left - 1, l2);
    nodes_[static_cast<size_t>(index)].right = right;
    return index;
  }

  std::vector<GbNode> nodes_;
};

}  // namespace detail

/// Boosted regression trees on logistic loss with second-order leaf
/// values, in the usual extreme-gradient-boosting style. A squared-loss
/// debug mode exists for oracle tests.
class GradientBoostingModel : public Learner {
 public:
  GradientBoostingModel() = default;

  void fit(const FlowTable& table, const GradientBoostingConfig& config) {
    require(!table.empty(), ErrorCode::EmptyTable, "gradient boosting needs a nonempty table");
    n_features_ = table.n_features();
    loss_ = config.loss;
    learning_rate_ = config.learning_rate;
    trees_.clear();

    const size_t n = table.n_rows();
    double y_mean = 0.0;
    for (int y : table.labels()) y_mean += y;
    y_mean /= double(n);

    if (loss_ == GbLoss::Logistic) {
      double p = std::clamp(y_mean, 1e-6, 1.0 - 1e-6);
      base_score_ = std::log(p / (1.0 - p));
    } else {
      base_score_ = 0.0;  // squared debug mode starts from a zero margin
    }

    std::vector<double> margins(n, base_score_);
    std::vector<double> grad(n), hess(n);
    for (size_t round = 0; round < config.n_rounds; ++round) {
      for (size_t i = 0; i < n; ++i) {
        int y = table.labels()[i];
        if (loss_ == GbLoss::Logistic) {
          grad[i] = gb_logistic_gradient(margins[i], y);
          hess[i] = gb_logistic_hessian(margins[i]);
        } else {
          grad[i] = margins[i] - double(y);
          hess[i] = 1.0;
        }
      }
      detail::GbTree tree;
      tree.fit(table, grad, hess, config.max_depth, config.l2);
      for (size_t i = 0; i < n; ++i) {
        margins[i] += config.learning_rate * tree.value_for(table.row(i));
      }
      trees_.push_back(std::move(tree));
    }
  }

  double margin_row(std::span<const double> x) const {
    double m = base_score_;
    for (const auto& tree : trees_) m += learning_rate_ * tree.value_for(x);
    return m;
  }

  double predict_proba_row(std::span<const double> x) const override {
    check_width(x.size());
    double m = margin_row(x);
    return loss_ == GbLoss::Logistic ? sigmoid(m) : std::clamp(m, 0.0, 1.0);
  }

  std::string kind() const override { return "gradient_boosting"; }
  size_t n_features() const override { return n_features_; }

  double base_score() const { return base_score_; }
  const std::vector<detail::GbTree>& trees() const { return trees_; }

  json save_state() const override {
    json trees = json::array();
    for (const auto& t : trees_) {
      json nodes = json::array();
      for (const auto& n : t.nodes()) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
      }
      trees.push_back(nodes);
    }
    return {{"n_features", n_features_},
            {"base_score", base_score_},
            {"learning_rate", learning_rate_},
            {"loss", loss_ == GbLoss::Logistic ? "logistic" : "squared"},
            {"trees", trees}};
  }

  void load_state(const json& state) {
    n_features_ = state.at("n_features").get<size_t>();
    base_score_ = state.at("base_score").get<double>();
    learning_rate_ = state.at("learning_rate").get<double>();
    loss_ = state.at("loss").get<std::string>() == "squared" ? GbLoss::Squared
                                                             : GbLoss::Logistic;
    trees_.clear();
    for (const auto& tj : state.at("trees")) {
      detail::GbTree tree;
      for (const auto& nj : tj) {
        detail::GbNode node;
        node.feature = nj.at(0).get<int>();
        node.threshold = nj.at(1).get<double>();
        node.left = nj.at(2).get<int>();
        node.right = nj.at(3).get<int>();
        node.value = nj.at(4).get<double>();
        tree.nodes().push_back(node);
      }
      trees_.push_back(std::move(tree));
    }
  }

 private:
  std::vector<detail::GbTree> trees_;
  double base_score_ = 0.0;
  double learning_rate_ = 0.1;
  GbLoss loss_ = GbLoss::Logistic;
  size_t n_features_ = 0;
};

inline LearnerPtr train_gradient_boosted_trees(const FlowTable& table,
                                               const GradientBoostingConfig& config = {}) {
  auto model = std::make_unique<GradientBoostingModel>();
  model->fit(table, config);
  return model;
}

}  // namespace kldetect
