#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "kldetect/decision_tree.hpp"
#include "kldetect/learner.hpp"
#include "kldetect/numeric.hpp"
#include "kldetect/rng.hpp"

namespace kldetect {

enum class MaxFeatures { Sqrt, All };

struct RandomForestConfig {
  size_t n_trees = 100;
  MaxFeatures max_features = MaxFeatures::Sqrt;
  bool bootstrap = true;
  uint64_t seed = 0;
  DecisionTreeConfig tree = {10, 5};
};

/// Bagged CART trees with per-split feature subsampling; the forest
/// probability is the mean of the member leaf probabilities.
class RandomForestModel : public Learner {
 public:
  RandomForestModel() = default;

  void fit(const FlowTable& table, const RandomForestConfig& config) {
    require(!table.empty(), ErrorCode::EmptyTable, "random forest needs a nonempty table");
    require(config.n_trees >= 1, ErrorCode::InvalidArgument, "n_trees must be >= 1");
    n_features_ = table.n_features();
    trees_.assign(config.n_trees, DecisionTreeModel());

    size_t k = config.max_features == MaxFeatures::All
                   ? n_features_
                   : std::max<size_t>(1, static_cast<size_t>(
                                             std::ceil(std::sqrt(double(n_features_)))));

    for (size_t t = 0; t < config.n_trees; ++t) {
      // per-tree stream so tree training is order-independent
      Rng rng = Rng::derive(config.seed, "forest_tree", t);

      std::vector<size_t> rows;
      if (config.bootstrap) {
        rows.resize(table.n_rows());
        for (auto& r : rows) r = rng.uniform_index(table.n_rows());
        std::sort(rows.begin(), rows.end());
      }

      std::function<std::vector<size_t>()> picker;
      if (k < n_features_) {
        picker = [this, k, &rng]() {
          // partial Fisher-Yates over feature indices, result sorted so the
          // split scan stays in ascending-feature order
          std::vector<size_t> pool(n_features_);
          std::iota(pool.begin(), pool.end(), size_t{0});
          for (size_t i = 0; i < k; ++i) {
            size_t j = i + rng.uniform_index(pool.size() - i);
            std::swap(pool[i], pool[j]);
          }
          pool.resize(k);
          std::sort(pool.begin(), pool.end());
          return pool;
        };
      }
      trees_[t].fit(table, config.tree, nullptr, picker ? &picker : nullptr,
                    config.bootstrap ? &rows : nullptr);
    }
  }

  double predict_proba_row(std::span<const double> x) const override {
    check_width(x.size());
    KahanSum sum;
    for (const auto& tree : trees_) sum.add(tree.predict_proba_row(x));
    return sum.value() / double(trees_.size());
  }

  std::string kind() const override { return "random_forest"; }
  size_t n_features() const override { return n_features_; }

  const std::vector<DecisionTreeModel>& trees() const { return trees_; }

  json save_state() const override {
    json trees = json::array();
    for (const auto& t : trees_) trees.push_back(t.save_state());
    return {{"n_features", n_features_}, {"trees", trees}};
  }

  void load_state(const json& state) {
    n_features_ = state.at("n_features").get<size_t>();
    trees_.clear();
    for (const auto& t : state.at("trees")) {
      DecisionTreeModel tree;
      tree.load_state(t);
      trees_.push_back(std::move(tree));
    }
  }

 private:
  std::vector<DecisionTreeModel> trees_;
  size_t n_features_ = 0;
};

inline LearnerPtr train_random_forest(const FlowTable& table,
                                      const RandomForestConfig& config = {}) {
  auto model = std::make_unique<RandomForestModel>();
  model->fit(table, config);
  return model;
}

}  // namespace kldetect
