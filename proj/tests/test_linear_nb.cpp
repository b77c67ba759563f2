#include "kldetect/linear_models.hpp"

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

}  // namespace

// --- Logistic regression ------------------------------------------------------

TEST(LogisticRegression, BalancedLabelsZeroFeaturesGiveHalfProbability) {
  FlowTable t = make_table(2, std::vector<double>(8, 0.0), {0, 1, 0, 1});
  LogisticRegressionModel model;
  model.fit(t, {});
  EXPECT_NEAR(model.intercept(), 0.0, 1e-12);
  EXPECT_NEAR(model.predict_proba_row(t.row(0)), 0.5, 1e-12);
  EXPECT_TRUE(model.converged());
}

TEST(LogisticRegression, GradientMatchesCentralFiniteDifferences) {
  Rng rng = Rng::derive(51, "lr_fd");
  std::vector<double> vals;
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 5; ++j) vals.push_back(rng.uniform(-1.0, 1.0));
    labels.push_back(static_cast<int>(rng.uniform_index(2)));
  }
  labels[0] = 0;
  labels[1] = 1;
  FlowTable t = make_table(5, vals, labels);

  std::vector<double> w(5);
  for (auto& v : w) v = rng.uniform(-0.8, 0.8);
  double b = rng.uniform(-0.5, 0.5);
  const double l2 = 0.03;
  const double h = 1e-6;

  auto grad = logistic_gradient(t, b, w, l2);
  double fd0 = (logistic_loss(t, b + h, w, l2) - logistic_loss(t, b - h, w, l2)) / (2 * h);
  EXPECT_NEAR(grad[0], fd0, 1e-5);
  for (size_t j = 0; j < 5; ++j) {
    auto wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    double fd = (logistic_loss(t, b, wp, l2) - logistic_loss(t, b, wm, l2)) / (2 * h);
    EXPECT_NEAR(grad[j + 1], fd, 1e-5);
  }
}

TEST(LogisticRegression, LearnsNoisyProblem) {
  Rng rng = Rng::derive(52, "lr_data");
  std::vector<double> vals;
  std::vector<int> labels;
  for (int i = 0; i < 400; ++i) {
    double x0 = rng.uniform();
    double x1 = rng.uniform();
    vals.push_back(x0);
    vals.push_back(x1);
    double p = 1.0 / (1.0 + std::exp(-(10.0 * x0 - 6.0 * x1 - 2.0)));
    labels.push_back(rng.uniform() < p ? 1 : 0);
  }
  FlowTable t = make_table(2, vals, labels);
  LogisticRegressionModel model;
  model.fit(t, {0.0, 200, 1e-8});
  EXPECT_TRUE(model.converged());
  EXPECT_GT(model.weights()[0], 0.0);
  EXPECT_LT(model.weights()[1], 0.0);
  EXPECT_GT(training_accuracy(model, t), 0.8);
}

TEST(LogisticRegression, PerfectSeparationFlaggedAsNonConverged) {
  FlowTable t = make_table(1, {0.0, 0.1, 0.2, 0.8, 0.9, 1.0}, {0, 0, 0, 1, 1, 1});
  LogisticRegressionModel model;
  model.fit(t, {0.0, 200, 1e-8});
  EXPECT_FALSE(model.converged());
  ASSERT_FALSE(model.warnings().empty());
  EXPECT_NE(model.warnings()[0].find("separation"), std::string::npos);

  // with a ridge penalty the same data converges cleanly
  LogisticRegressionModel ridge;
  ridge.fit(t, {0.1, 200, 1e-8});
  EXPECT_TRUE(ridge.converged());
}

// --- Naive Bayes ----------------------------------------------------------------

TEST(NaiveBayes, SymmetricClassesGiveHalfProbabilityAtOrigin) {
  // class 0 mirrored around 0 against class 1
  FlowTable t = make_table(1, {-2, -1.5, -1, 1, 1.5, 2}, {0, 0, 0, 1, 1, 1});
  NaiveBayesModel model;
  model.fit(t);
  std::vector<double> origin = {0.0};
  EXPECT_NEAR(model.predict_proba_row(origin), 0.5, 1e-12);
}

TEST(NaiveBayes, SeparatedBlobsPerfectlyClassified) {
  Rng rng = Rng::derive(61, "nb_blobs");
  std::vector<double> vals;
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) {
    int y = i % 2;
    vals.push_back((y == 0 ? -5.0 : 5.0) + rng.gaussian());
    labels.push_back(y);
  }
  FlowTable t = make_table(1, vals, labels);
  NaiveBayesModel model;
  model.fit(t);
  EXPECT_DOUBLE_EQ(training_accuracy(model, t), 1.0);
}

TEST(NaiveBayes, PosteriorMatchesHandComputedDensities) {
  FlowTable t = make_table(2, {1, 10, 2, 12, 3, 14, 7, 20, 8, 22, 9, 24}, {0, 0, 0, 1, 1, 1});
  NaiveBayesModel model;
  model.fit(t);

  // hand computation with population variances and equal priors
  auto gauss = [](double x, double mu, double var) {
    return std::exp(-(x - mu) * (x - mu) / (2 * var)) / std::sqrt(2 * M_PI * var);
  };
  std::vector<double> probe = {2.5, 15.0};
  // class 0: means (2, 12), vars (2/3, 8/3); class 1: means (8, 22), vars (2/3, 8/3)
  double like0 = gauss(2.5, 2.0, 2.0 / 3.0) * gauss(15.0, 12.0, 8.0 / 3.0) * 0.5;
  double like1 = gauss(2.5, 8.0, 2.0 / 3.0) * gauss(15.0, 22.0, 8.0 / 3.0) * 0.5;
  double expected = like1 / (like0 + like1);
  EXPECT_NEAR(model.predict_proba_row(probe), expected, 1e-9);
}

TEST(NaiveBayes, SingleClassErrorsAndVarianceFloorHolds) {
  FlowTable single = make_table(1, {1, 2, 3}, {1, 1, 1});
  NaiveBayesModel model;
  try {
    model.fit(single);
    FAIL() << "expected SingleClass";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingleClass);
  }

  // constant feature: the variance floor keeps densities finite
  FlowTable constant = make_table(1, {3, 3, 3, 3}, {0, 0, 1, 1});
  model.fit(constant);
  std::vector<double> probe = {3.0};
  EXPECT_NEAR(model.predict_proba_row(probe), 0.5, 1e-9);
}
