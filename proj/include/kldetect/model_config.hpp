#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "kldetect/adaboost.hpp"
#include "kldetect/decision_tree.hpp"
#include "kldetect/gradient_boosting.hpp"
#include "kldetect/learner.hpp"
#include "kldetect/linear_models.hpp"
#include "kldetect/random_forest.hpp"
#include "kldetect/svm.hpp"

namespace kldetect {

// the seven base models; ensembles compose these
using BaseModelConfig =
    std::variant<DecisionTreeConfig, RandomForestConfig, AdaBoostConfig,
                 GradientBoostingConfig, LogisticRegressionConfig, NaiveBayesConfig, SvmConfig>;

struct VotingConfig {
  std::vector<BaseModelConfig> members;  // defaulted in normalize()
  uint64_t seed = 0;
};

struct StackingConfig {
  std::vector<BaseModelConfig> bases;
  LogisticRegressionConfig meta = {1e-3, 100, 1e-8};
  int n_folds = 5;
  uint64_t seed = 0;
};

struct BlendingConfig {
  std::vector<BaseModelConfig> bases;
  LogisticRegressionConfig meta = {1e-3, 100, 1e-8};
  double holdout_fraction = 0.2;
  uint64_t seed = 0;
};

using ModelConfig =
    std::variant<DecisionTreeConfig, RandomForestConfig, AdaBoostConfig,
                 GradientBoostingConfig, LogisticRegressionConfig, NaiveBayesConfig, SvmConfig,
                 VotingConfig, StackingConfig, BlendingConfig>;

inline const char* model_kind_name(const ModelConfig& config) {
  struct Visitor {
    const char* operator()(const DecisionTreeConfig&) { return "decision_tree"; }
    const char* operator()(const RandomForestConfig&) { return "random_forest"; }
    const char* operator()(const AdaBoostConfig&) { return "adaboost"; }
    const char* operator()(const GradientBoostingConfig&) { return "gradient_boosting"; }
    const char* operator()(const LogisticRegressionConfig&) { return "logistic_regression"; }
    const char* operator()(const NaiveBayesConfig&) { return "naive_bayes"; }
    const char* operator()(const SvmConfig&) { return "svm"; }
    const char* operator()(const VotingConfig&) { return "voting"; }
    const char* operator()(const StackingConfig&) { return "stacking"; }
    const char* operator()(const BlendingConfig&) { return "blending"; }
  };
  return std::visit(Visitor{}, config);
}

// default wirings: voting groups the forest, boosted trees and adaboost;
// stacking and blending feed RF, SVC and boosted trees to the meta-learner
inline std::vector<BaseModelConfig> default_voting_members() {
  return {RandomForestConfig{}, GradientBoostingConfig{}, AdaBoostConfig{}};
}

inline std::vector<BaseModelConfig> default_stacking_bases() {
  return {RandomForestConfig{}, SvmConfig{}, GradientBoostingConfig{}};
}

// --- JSON (de)serialization of configs ----------------------------------

inline json base_config_to_json(const BaseModelConfig& config);

inline json config_params_to_json(const DecisionTreeConfig& c) {
  return {{"max_depth", c.max_depth}, {"min_samples_leaf", c.min_samples_leaf}};
}

inline json config_params_to_json(const RandomForestConfig& c) {
  return {{"n_trees", c.n_trees},
          {"max_features", c.max_features == MaxFeatures::Sqrt ? "sqrt" : "all"},
          {"bootstrap", c.bootstrap},
          {"seed", c.seed},
          {"tree", config_params_to_json(c.tree)}};
}

inline json config_params_to_json(const AdaBoostConfig& c) {
  return {{"n_rounds", c.n_rounds}, {"seed", c.seed}};
}

inline json config_params_to_json(const GradientBoostingConfig& c) {
  return {{"n_rounds", c.n_rounds},
          {"learning_rate", c.learning_rate},
          {"max_depth", c.max_depth},
          {"l2", c.l2},
          {"loss", c.loss == GbLoss::Logistic ? "logistic" : "squared"},
          {"seed", c.seed}};
}

inline json config_params_to_json(const LogisticRegressionConfig& c) {
  return {{"l2", c.l2}, {"max_iters", c.max_iters}, {"tol", c.tol}};
}

inline json config_params_to_json(const NaiveBayesConfig& c) {
  return {{"variance_floor", c.variance_floor}};
}

inline json config_params_to_json(const SvmConfig& c) {
  return {{"C", c.C},
          {"gamma", c.gamma},
          {"tol", c.tol},
          {"max_passes", c.max_passes},
          {"max_updates", c.max_updates},
          {"max_train_rows", c.max_train_rows},
          {"subsample_to_cap", c.subsample_to_cap},
          {"seed", c.seed}};
}

inline json config_params_to_json(const VotingConfig& c) {
  json members = json::array();
  for (const auto& m : c.members) members.push_back(base_config_to_json(m));
  return {{"members", members}, {"seed", c.seed}};
}

inline json config_params_to_json(const StackingConfig& c) {
  json bases = json::array();
  for (const auto& b : c.bases) bases.push_back(base_config_to_json(b));
  return {{"bases", bases},
          {"meta", config_params_to_json(c.meta)},
          {"n_folds", c.n_folds},
          {"seed", c.seed}};
}

inline json config_params_to_json(const BlendingConfig& c) {
  json bases = json::array();
  for (const auto& b : c.bases) bases.push_back(base_config_to_json(b));
  return {{"bases", bases},
          {"meta", config_params_to_json(c.meta)},
          {"holdout_fraction", c.holdout_fraction},
          {"seed", c.seed}};
}

inline json model_config_to_json(const ModelConfig& config) {
  json out = std::visit([](const auto& c) { return config_params_to_json(c); }, config);
  out["kind"] = model_kind_name(config);
  return out;
}

inline json base_config_to_json(const BaseModelConfig& config) {
  json out = std::visit([](const auto& c) { return config_params_to_json(c); }, config);
  out["kind"] = std::visit([](const auto& c) { return model_kind_name(ModelConfig(c)); }, config);
  return out;
}

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

inline DecisionTreeConfig decision_tree_from_json(const json& j) {
  DecisionTreeConfig c;
  c.max_depth = get_or(j, "max_depth", c.max_depth);
  c.min_samples_leaf = get_or(j, "min_samples_leaf", c.min_samples_leaf);
  return c;
}

inline RandomForestConfig random_forest_from_json(const json& j) {
  RandomForestConfig c;
  c.n_trees = get_or(j, "n_trees", c.n_trees);
  if (j.contains("max_features")) {
    c.max_features = j.at("max_features").get<std::string>() == "all" ? MaxFeatures::All
                                                                      : MaxFeatures::Sqrt;
  }
  c.bootstrap = get_or(j, "bootstrap", c.bootstrap);
  c.seed = get_or(j, "seed", c.seed);
  if (j.contains("tree")) c.tree = decision_tree_from_json(j.at("tree"));
  return c;
}

inline AdaBoostConfig adaboost_from_json(const json& j) {
  AdaBoostConfig c;
  c.n_rounds = get_or(j, "n_rounds", c.n_rounds);
  c.seed = get_or(j, "seed", c.seed);
  return c;
}

inline GradientBoostingConfig gradient_boosting_from_json(const json& j) {
  GradientBoostingConfig c;
  c.n_rounds = get_or(j, "n_rounds", c.n_rounds);
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
  c.max_depth = get_or(j, "max_depth", c.max_depth);
  c.l2 = get_or(j, "l2", c.l2);
  if (j.contains("loss")) {
    c.loss = j.at("loss").get<std::string>() == "squared" ? GbLoss::Squared : GbLoss::Logistic;
  }
  c.seed = get_or(j, "seed", c.seed);
  return c;
}

inline LogisticRegressionConfig logistic_regression_from_json(const json& j) {
  LogisticRegressionConfig c;
  c.l2 = get_or(j, "l2", c.l2);
  c.max_iters = get_or(j, "max_iters", c.max_iters);
  c.tol = get_or(j, "tol", c.tol);
  return c;
}

inline NaiveBayesConfig naive_bayes_from_json(const json& j) {
  NaiveBayesConfig c;
  c.variance_floor = get_or(j, "variance_floor", c.variance_floor);
  return c;
}

inline SvmConfig svm_from_json(const json& j) {
  SvmConfig c;
  c.C = get_or(j, "C", c.C);
  c.gamma = get_or(j, "gamma", c.gamma);
  c.tol = get_or(j, "tol", c.tol);
  c.max_passes = get_or(j, "max_passes", c.max_passes);
  c.max_updates = get_or(j, "max_updates", c.max_updates);
  c.max_train_rows = get_or(j, "max_train_rows", c.max_train_rows);
  c.subsample_to_cap = get_or(j, "subsample_to_cap", c.subsample_to_cap);
  c.seed = get_or(j, "seed", c.seed);
  return c;
}

}  // namespace detail

inline BaseModelConfig base_config_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "decision_tree") return detail::decision_tree_from_json(j);
  if (kind == "random_forest") return detail::random_forest_from_json(j);
  if (kind == "adaboost") return detail::adaboost_from_json(j);
  if (kind == "gradient_boosting") return detail::gradient_boosting_from_json(j);
  if (kind == "logistic_regression") return detail::logistic_regression_from_json(j);
  if (kind == "naive_bayes") return detail::naive_bayes_from_json(j);
  if (kind == "svm") return detail::svm_from_json(j);
  fail(ErrorCode::ParseError, "unknown base model kind: " + kind);
}

inline ModelConfig model_config_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "voting") {
    VotingConfig c;
    if (j.contains("members")) {
      for (const auto& m : j.at("members")) c.members.push_back(base_config_from_json(m));
    }
    c.seed = detail::get_or(j, "seed", c.seed);
    return c;
  }
  if (kind == "stacking") {
    StackingConfig c;
    if (j.contains("bases")) {
      for (const auto& b : j.at("bases")) c.bases.push_back(base_config_from_json(b));
    }
    if (j.contains("meta")) c.meta = detail::logistic_regression_from_json(j.at("meta"));
    c.n_folds = detail::get_or(j, "n_folds", c.n_folds);
    c.seed = detail::get_or(j, "seed", c.seed);
    return c;
  }
  if (kind == "blending") {
    BlendingConfig c;
    if (j.contains("bases")) {
      for (const auto& b : j.at("bases")) c.bases.push_back(base_config_from_json(b));
    }
    if (j.contains("meta")) c.meta = detail::logistic_regression_from_json(j.at("meta"));
    c.holdout_fraction = detail::get_or(j, "holdout_fraction", c.holdout_fraction);
    c.seed = detail::get_or(j, "seed", c.seed);
    return c;
  }
  BaseModelConfig base = base_config_from_json(j);
  return std::visit([](const auto& c) { return ModelConfig(c); }, base);
}

// --- base model training --------------------------------------------------

inline LearnerPtr train_base_model(const FlowTable& table, const BaseModelConfig& config) {
  struct Visitor {
    const FlowTable& table;
    LearnerPtr operator()(const DecisionTreeConfig& c) { return train_decision_tree(table, c); }
    LearnerPtr operator()(const RandomForestConfig& c) { return train_random_forest(table, c); }
    LearnerPtr operator()(const AdaBoostConfig& c) { return train_adaboost(table, c); }
    LearnerPtr operator()(const GradientBoostingConfig& c) {
      return train_gradient_boosted_trees(table, c);
    }
    LearnerPtr operator()(const LogisticRegressionConfig& c) {
      return train_logistic_regression(table, c);
    }
    LearnerPtr operator()(const NaiveBayesConfig& c) { return train_naive_bayes(table, c); }
    LearnerPtr operator()(const SvmConfig& c) { return train_svm_rbf(table, c); }
  };
  return std::visit(Visitor{table}, config);
}

}  // namespace kldetect
