#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "kldetect/model_config.hpp"
#include "kldetect/numeric.hpp"

namespace kldetect {

/// Hard-majority vote over an odd number of members. predict_proba is the
/// mean member probability, kept as a graded ranking score for ROC/AUC;
/// on rows where extreme member probabilities disagree with the vote, the
/// label follows the vote.
class VotingModel : public Learner {
 public:
  VotingModel() = default;

  explicit VotingModel(std::vector<LearnerPtr> members) : members_(std::move(members)) {
    require(members_.size() >= 3 && members_.size() % 2 == 1, ErrorCode::EvenMemberCount,
            "voting needs an odd member count >= 3");
    n_features_ = members_[0]->n_features();
  }

  double predict_proba_row(std::span<const double> x) const override {
    check_width(x.size());
    KahanSum sum;
    for (const auto& m : members_) sum.add(m->predict_proba_row(x));
    return sum.value() / double(members_.size());
  }

  int predict_row(std::span<const double> x) const override {
    size_t votes = 0;
    for (const auto& m : members_) votes += static_cast<size_t>(m->predict_row(x));
    return votes * 2 > members_.size() ? 1 : 0;
  }

  std::string kind() const override { return "voting"; }
  size_t n_features() const override { return n_features_; }

  std::vector<std::string> warnings() const override {
    std::vector<std::string> all;
    for (const auto& m : members_) {
      for (const auto& w : m->warnings()) all.push_back(m->kind() + ": " + w);
    }
    return all;
  }

  const std::vector<LearnerPtr>& members() const { return members_; }

  json save_state() const override {
    json members = json::array();
    for (const auto& m : members_) {
      members.push_back({{"kind", m->kind()}, {"state", m->save_state()}});
    }
    return {{"n_features", n_features_}, {"members", members}};
  }

 private:
  std::vector<LearnerPtr> members_;
  size_t n_features_ = 0;
};

inline LearnerPtr train_voting(const FlowTable& table, VotingConfig config = {}) {
  if (config.members.empty()) config.members = default_voting_members();
  require(config.members.size() >= 3 && config.members.size() % 2 == 1,
          ErrorCode::EvenMemberCount, "voting needs an odd member count >= 3");
  std::vector<LearnerPtr> members;
  members.reserve(config.members.size());
  for (const auto& member_config : config.members) {
    members.push_back(train_base_model(table, member_config));
  }
  return std::make_unique<VotingModel>(std::move(members));
}

/// Two-layer stack: out-of-fold base probabilities feed a logistic
/// meta-learner; bases are refit on the full training split for
/// inference. Fold bookkeeping is kept for the leakage checks.
class StackingModel : public Learner {
 public:
  StackingModel() = default;

  double predict_proba_row(std::span<const double> x) const override {
    check_width(x.size());
    std::vector<double> meta_row(bases_.size());
    for (size_t b = 0; b < bases_.size(); ++b) meta_row[b] = bases_[b]->predict_proba_row(x);
    return meta_->predict_proba_row(meta_row);
  }

  std::string kind() const override { return "stacking"; }
  size_t n_features() const override { return n_features_; }

  std::vector<std::string> warnings() const override {
    std::vector<std::string> all;
    for (const auto& b : bases_) {
      for (const auto& w : b->warnings()) all.push_back(b->kind() + ": " + w);
    }
    for (const auto& w : meta_->warnings()) all.push_back("meta: " + w);
    return all;
  }

  const std::vector<LearnerPtr>& bases() const { return bases_; }
  const LogisticRegressionModel& meta() const { return *meta_; }
  const std::vector<int>& fold_of_row() const { return fold_of_row_; }
  const std::vector<std::vector<size_t>>& fold_train_rows() const { return fold_train_rows_; }
  size_t meta_feature_count() const { return bases_.size(); }

  json save_state() const override {
    json bases = json::array();
    for (const auto& b : bases_) {
      bases.push_back({{"kind", b->kind()}, {"state", b->save_state()}});
    }
    return {{"n_features", n_features_},
            {"bases", bases},
            {"meta", meta_->save_state()}};
  }

  friend LearnerPtr train_stacking(const FlowTable& table, StackingConfig config);

 private:
  std::vector<LearnerPtr> bases_;
  std::unique_ptr<LogisticRegressionModel> meta_;
  std::vector<int> fold_of_row_;
  std::vector<std::vector<size_t>> fold_train_rows_;
  size_t n_features_ = 0;
};

inline LearnerPtr train_stacking(const FlowTable& table, StackingConfig config = {}) {
  if (config.bases.empty()) config.bases = default_stacking_bases();
  require(config.n_folds >= 2, ErrorCode::FoldTooSmall, "stacking needs n_folds >= 2");

  auto model = std::make_unique<StackingModel>();
  model->n_features_ = table.n_features();
  model->fold_of_row_ = make_stratified_folds(table.labels(), config.n_folds, config.seed);
  model->fold_train_rows_.resize(static_cast<size_t>(config.n_folds));

  const size_t n = table.n_rows();
  const size_t n_bases = config.bases.size();
  std::vector<double> meta_features(n * n_bases, 0.0);

  for (int f = 0; f < config.n_folds; ++f) {
    std::vector<size_t> train_rows, val_rows;
    for (size_t r = 0; r < n; ++r) {
      (model->fold_of_row_[r] == f ? val_rows : train_rows).push_back(r);
    }
    model->fold_train_rows_[static_cast<size_t>(f)] = train_rows;
    FlowTable fold_train = table.subset_rows(train_rows);
    FlowTable fold_val = table.subset_rows(val_rows);
    for (size_t b = 0; b < n_bases; ++b) {
      LearnerPtr fold_model = train_base_model(fold_train, config.bases[b]);
      auto proba = fold_model->predict_proba(fold_val);
      for (size_t i = 0; i < val_rows.size(); ++i) {
        meta_features[val_rows[i] * n_bases + b] = proba[i];
      }
    }
  }

  std::vector<std::string> meta_names;
  for (size_t b = 0; b < n_bases; ++b) {
    meta_names.push_back("base_" + std::to_string(b) + "_proba");
  }
  FlowTable meta_table(meta_names, meta_features, table.labels());
  model->meta_ = std::make_unique<LogisticRegressionModel>();
  model->meta_->fit(meta_table, config.meta);

  // refit bases on the full training split for inference
  for (const auto& base_config : config.bases) {
    model->bases_.push_back(train_base_model(table, base_config));
  }
  return model;
}

/// Blending: bases fit on the non-holdout portion, the meta-learner on
/// the held-out rows' base probabilities. No row serves both purposes.
class BlendingModel : public Learner {
 public:
  BlendingModel() = default;

  double predict_proba_row(std::span<const double> x) const override {
    check_width(x.size());
    std::vector<double> meta_row(bases_.size());
    for (size_t b = 0; b < bases_.size(); ++b) meta_row[b] = bases_[b]->predict_proba_row(x);
    return meta_->predict_proba_row(meta_row);
  }

  std::string kind() const override { return "blending"; }
  size_t n_features() const override { return n_features_; }

  std::vector<std::string> warnings() const override {
    std::vector<std::string> all;
    for (const auto& b : bases_) {
      for (const auto& w : b->warnings()) all.push_back(b->kind() + ": " + w);
    }
    for (const auto& w : meta_->warnings()) all.push_back("meta: " + w);
    return all;
  }

  const std::vector<LearnerPtr>& bases() const { return bases_; }
  const LogisticRegressionModel& meta() const { return *meta_; }
  const std::vector<size_t>& base_rows() const { return base_rows_; }
  const std::vector<size_t>& holdout_rows() const { return holdout_rows_; }

  json save_state() const override {
    json bases = json::array();
    for (const auto& b : bases_) {
      bases.push_back({{"kind", b->kind()}, {"state", b->save_state()}});
    }
    return {{"n_features", n_features_},
            {"bases", bases},
            {"meta", meta_->save_state()}};
  }

  friend LearnerPtr train_blending(const FlowTable& table, BlendingConfig config);

 private:
  std::vector<LearnerPtr> bases_;
  std::unique_ptr<LogisticRegressionModel> meta_;
  std::vector<size_t> base_rows_;
  std::vector<size_t> holdout_rows_;
  size_t n_features_ = 0;
};

inline LearnerPtr train_blending(const FlowTable& table, BlendingConfig config = {}) {
  if (config.bases.empty()) config.bases = default_stacking_bases();
  require(config.holdout_fraction > 0.0 && config.holdout_fraction <= 0.5,
          ErrorCode::InvalidArgument, "holdout_fraction must lie in (0, 0.5]");

  auto model = std::make_unique<BlendingModel>();
  model->n_features_ = table.n_features();

  // stratified hash-ordered partition into base-training and holdout rows
  auto counts = table.class_counts();
  for (int cls = 0; cls < 2; ++cls) {
    size_t n_c = counts[static_cast<size_t>(cls)];
    require(n_c >= 2, ErrorCode::DegenerateHoldout,
            "class " + std::to_string(cls) + " too small for a blending holdout");
    std::vector<size_t> rows;
    for (size_t r = 0; r < table.n_rows(); ++r) {
      if (table.labels()[r] == cls) rows.push_back(r);
    }
    auto ordered = detail::hash_ordered(rows, config.seed ^ 0xB1E4D1);
    auto n_holdout = static_cast<size_t>(std::llround(config.holdout_fraction * double(n_c)));
    n_holdout = std::clamp<size_t>(n_holdout, 1, n_c - 1);
    model->holdout_rows_.insert(model->holdout_rows_.end(), ordered.begin(),
                                ordered.begin() + n_holdout);
    model->base_rows_.insert(model->base_rows_.end(), ordered.begin() + n_holdout,
                             ordered.end());
  }
  std::sort(model->base_rows_.begin(), model->base_rows_.end());
  std::sort(model->holdout_rows_.begin(), model->holdout_rows_.end());

  FlowTable base_part = table.subset_rows(model->base_rows_);
  FlowTable holdout = table.subset_rows(model->holdout_rows_);

  const size_t n_bases = config.bases.size();
  std::vector<double> meta_features(holdout.n_rows() * n_bases);
  for (size_t b = 0; b < n_bases; ++b) {
    model->bases_.push_back(train_base_model(base_part, config.bases[b]));
    auto proba = model->bases_[b]->predict_proba(holdout);
    for (size_t i = 0; i < holdout.n_rows(); ++i) meta_features[i * n_bases + b] = proba[i];
  }

  std::vector<std::string> meta_names;
  for (size_t b = 0; b < n_bases; ++b) {
    meta_names.push_back("base_" + std::to_string(b) + "_proba");
  }
  FlowTable meta_table(meta_names, meta_features, holdout.labels());
  model->meta_ = std::make_unique<LogisticRegressionModel>();
  model->meta_->fit(meta_table, config.meta);
  return model;
}

}  // namespace kldetect
