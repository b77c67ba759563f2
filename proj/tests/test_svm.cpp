#include "kldetect/svm.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "kldetect/rng.hpp"

using namespace kldetect;

namespace {

FlowTable make_table(size_t n_features, const std::vector<double>& rowmajor,
                     const std::vector<int>& labels) {
  std::vector<std::string> names;
  for (size_t i = 0; i < n_features; ++i) names.push_back("f" + std::to_string(i));
  return FlowTable(names, rowmajor, labels);
}

// dual objective W(alpha) = sum(alpha) - 0.5 sum_ij alpha_i alpha_j y_i y_j K_ij
// computed with the test's own RBF kernel
double dual_objective(const FlowTable& t, const std::vector<double>& alpha, double gamma) {
  const size_t n = t.n_rows();
  double total = 0.0;
  for (double a : alpha) total += a;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (size_t c = 0; c < t.n_features(); ++c) {
        double diff = t.at(i, c) - t.at(j, c);
        d2 += diff * diff;
      }
      double yi = t.labels()[i] == 1 ? 1.0 : -1.0;
      double yj = t.labels()[j] == 1 ? 1.0 : -1.0;
      total -= 0.5 * alpha[i] * alpha[j] * yi * yj * std::exp(-gamma * d2);
    }
  }
  return total;
}

}  // namespace

TEST(Svm, TwoPointDecisionBoundaryAtMidpoint) {
  FlowTable t = make_table(2, {0.0, 0.0, 1.0, 1.0}, {0, 1});
  SvmRbfModel model;
  model.fit(t, {10.0, 1.0, 1e-4, 5, 200000, 5000, true, 0});
  std::vector<double> midpoint = {0.5, 0.5};
  EXPECT_NEAR(model.decision_value(midpoint), 0.0, 1e-6);
  EXPECT_GT(model.decision_value(std::vector<double>{1.0, 1.0}), 0.0);
  EXPECT_LT(model.decision_value(std::vector<double>{0.0, 0.0}), 0.0);
}

TEST(Svm, XorPatternSeparatedByRbf) {
  FlowTable t = make_table(2, {0, 0, 1, 1, 0, 1, 1, 0}, {0, 0, 1, 1});
  SvmRbfModel model;
  model.fit(t, {10.0, 1.0, 1e-4, 5, 200000, 5000, true, 0});
  EXPECT_DOUBLE_EQ(training_accuracy(model, t), 1.0);
}

TEST(Svm, DualFeasibilityAndObjectiveDominateRandomFeasiblePoints) {
  Rng rng = Rng::derive(71, "svm_dual");
  std::vector<double> vals;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    int y = i % 2;
    vals.push_back((y == 0 ? 0.3 : 0.7) + 0.2 * rng.gaussian());
    vals.push_back(rng.uniform());
    labels.push_back(y);
  }
  FlowTable t = make_table(2, vals, labels);
  const double C = 1.5;
  SvmConfig config;
  config.C = C;
  config.gamma = 0.8;
  config.tol = 1e-5;
  SvmRbfModel model;
  model.fit(t, config);

  // sum alpha_i y_i = 0 within tolerance
  const auto& alpha = model.training_alphas();
  double dot = 0.0;
  for (size_t i = 0; i < alpha.size(); ++i) {
    EXPECT_GE(alpha[i], -1e-12);
    EXPECT_LE(alpha[i], C + 1e-12);
    dot += alpha[i] * (t.labels()[i] == 1 ? 1.0 : -1.0);
  }
  EXPECT_NEAR(dot, 0.0, 1e-9);

  double w_model = dual_objective(t, alpha, 0.8);
  for (int trial = 0; trial < 1000; ++trial) {
    // random feasible point: draw both sides, then scale to equalize
    std::vector<double> cand(alpha.size(), 0.0);
    double s_pos = 0.0, s_neg = 0.0;
    for (size_t i = 0; i < cand.size(); ++i) {
      cand[i] = rng.uniform() * C;
      (t.labels()[i] == 1 ? s_pos : s_neg) += cand[i];
    }
    double target = std::min(s_pos, s_neg);
    for (size_t i = 0; i < cand.size(); ++i) {
      cand[i] *= (t.labels()[i] == 1 ? target / s_pos : target / s_neg);
    }
    EXPECT_GE(w_model, dual_objective(t, cand, 0.8) - 1e-9)
        << "random feasible point beat the SMO solution";
  }
}

TEST(Svm, ProbabilitiesCalibratedAndConsistent) {
  Rng rng = Rng::derive(72, "svm_platt");
  std::vector<double> vals;
  std::vector<int> labels;
  for (int i = 0; i < 80; ++i) {
    int y = static_cast<int>(rng.uniform_index(2));
    vals.push_back((y == 0 ? 0.3 : 0.7) + 0.15 * rng.gaussian());
    labels.push_back(y);
  }
  labels[0] = 0;
  labels[1] = 1;
  FlowTable t = make_table(1, vals, labels);
  SvmRbfModel model;
  model.fit(t, {});
  for (size_t r = 0; r < t.n_rows(); ++r) {
    double p = model.predict_proba_row(t.row(r));
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_EQ(model.predict_row(t.row(r)), p > 0.5 ? 1 : 0);
  }
  EXPECT_GT(training_accuracy(model, t), 0.8);
}

TEST(Svm, TrainingSetTooLargeSignalsWhenSubsamplingDisabled) {
  Rng rng = Rng::derive(73, "svm_cap");
  std::vector<double> vals;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    vals.push_back(rng.uniform());
    labels.push_back(i % 2);
  }
  FlowTable t = make_table(1, vals, labels);

  SvmConfig config;
  config.max_train_rows = 10;
  config.subsample_to_cap = false;
  SvmRbfModel model;
  try {
    model.fit(t, config);
    FAIL() << "expected TrainingSetTooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TrainingSetTooLarge);
  }

  config.subsample_to_cap = true;
  model.fit(t, config);
  ASSERT_FALSE(model.warnings().empty());
  EXPECT_NE(model.warnings()[0].find("subsample"), std::string::npos);
}

TEST(Svm, DeterministicGivenSeed) {
  Rng rng = Rng::derive(74, "svm_det");
  std::vector<double> vals;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    vals.push_back(rng.uniform());
    vals.push_back(rng.uniform());
    labels.push_back(static_cast<int>(rng.uniform_index(2)));
  }
  labels[0] = 0;
  labels[1] = 1;
  FlowTable t = make_table(2, vals, labels);
  SvmRbfModel a, b;
  a.fit(t, {});
  b.fit(t, {});
  EXPECT_EQ(a.save_state().dump(), b.save_state().dump());
}
