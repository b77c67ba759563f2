#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kldetect/decision_tree.hpp"
#include "kldetect/learner.hpp"
#include "kldetect/numeric.hpp"

namespace kldetect {

struct AdaBoostConfig {
  size_t n_rounds = 100;
  uint64_t seed = 0;  // kept for interface uniformity; training is deterministic
};

// alpha_t = 0.5 * ln((1 - eps) / eps); eps is clamped away from {0,1}
inline double adaboost_stage_weight(double epsilon) {
  const double floor = 1e-12;
  double e = std::clamp(epsilon, floor, 1.0 - floor);
  return 0.5 * std::log((1.0 - e) / e);
}

struct AdaBoostRound {
  double epsilon = 0.0;
  double alpha = 0.0;
  double weight_sum_after = 0.0;  // recomputed sum of sample weights post-update
  bool discarded = false;
};

/// Discrete AdaBoost over depth-1 stumps on +/-1 labels. Rounds with
/// weighted error >= 0.5 are discarded; ten consecutive discards stop
/// training. The margin maps to a probability through a logistic link,
/// documented as an uncalibrated ranking score.
class AdaBoostModel : public Learner {
 public:
  AdaBoostModel() = default;

  void fit(const FlowTable& table, const AdaBoostConfig& config) {
    require(!table.empty(), ErrorCode::EmptyTable, "adaboost needs a nonempty table");
    auto counts = table.class_counts();
    require(counts[0] > 0 && counts[1] > 0, ErrorCode::SingleClass,
            "adaboost needs both classes present");

    n_features_ = table.n_features();
    stumps_.clear();
    alphas_.clear();
    rounds_.clear();

    const size_t n = table.n_rows();
    std::vector<double> weights(n, 1.0 / double(n));
    const DecisionTreeConfig stump_config{1, 1};

    int consecutive_discards = 0;
    for (size_t t = 0; t < config.n_rounds; ++t) {
      DecisionTreeModel stump;
      stump.fit(table, stump_config, &weights);

      std::vector<int> preds(n);
      double epsilon = 0.0;
      for (size_t i = 0; i < n; ++i) {
        preds[i] = stump.predict_row(table.row(i));
        if (preds[i] != table.labels()[i]) epsilon += weights[i];
      }

      AdaBoostRound round;
      round.epsilon = epsilon;
      if (epsilon >= 0.5) {
        round.discarded = true;
        rounds_.push_back(round);
        if (++consecutive_discards >= 10) break;
        continue;
      }
      consecutive_discards = 0;

      double alpha = adaboost_stage_weight(epsilon);
      round.alpha = alpha;
      stumps_.push_back(std::move(stump));
      alphas_.push_back(alpha);

      if (epsilon <= 1e-12) {
        // perfect weak learner: capped alpha recorded, nothing left to reweight
        round.weight_sum_after = 1.0;
        rounds_.push_back(round);
        break;
      }

      double z = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double y = table.labels()[i] == 1 ? 1.0 : -1.0;
        double h = preds[i] == 1 ? 1.0 : -1.0;
        weights[i] *= std::exp(-alpha * y * h);
        z += weights[i];
      }
      KahanSum check;
      for (auto& w : weights) {
        w /= z;
        check.add(w);
      }
      round.weight_sum_after = check.value();
      rounds_.push_back(round);
    }
  }

  double margin_row(std::span<const double> x) const {
    double f = 0.0;
    for (size_t t = 0; t < stumps_.size(); ++t) {
      f += alphas_[t] * (stumps_[t].predict_row(x) == 1 ? 1.0 : -1.0);
    }
    return f;
  }

  double predict_proba_row(std::span<const double> x) const override {
    check_width(x.size());
    return sigmoid(margin_row(x));
  }

  std::string kind() const override { return "adaboost"; }
  size_t n_features() const override { return n_features_; }

  const std::vector<AdaBoostRound>& rounds() const { return rounds_; }
  const std::vector<double>& stage_weights() const { return alphas_; }

  json save_state() const override {
    json stumps = json::array();
    for (const auto& s : stumps_) stumps.push_back(s.save_state());
    return {{"n_features", n_features_}, {"alphas", alphas_}, {"stumps", stumps}};
  }

  void load_state(const json& state) {
    n_features_ = state.at("n_features").get<size_t>();
    alphas_ = state.at("alphas").get<std::vector<double>>();
    stumps_.clear();
    for (const auto& s : state.at("stumps")) {
      DecisionTreeModel stump;
      stump.load_state(s);
      stumps_.push_back(std::move(stump));
    }
  }

 private:
  std::vector<DecisionTreeModel> stumps_;
  std::vector<double> alphas_;
  std::vector<AdaBoostRound> rounds_;
  size_t n_features_ = 0;
};

inline LearnerPtr train_adaboost(const FlowTable& table, const AdaBoostConfig& config = {}) {
  auto model = std::make_unique<AdaBoostModel>();
  model->fit(table, config);
  return model;
}

}  // namespace kldetect
