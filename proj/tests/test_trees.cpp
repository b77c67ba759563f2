#include "kldetect/decision_tree.hpp"
#include "kldetect/random_forest.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "kldetect/rng.hpp"

using namespace kldetect;

namespace {

FlowTable make_table(size_t n_features, const std::vector<double>& rowmajor,
                     const std::vector<int>& labels) {
  std::vector<std::string> names;
  for (size_t i = 0; i < n_features; ++i) names.push_back("f" + std::to_string(i));
  return FlowTable(names, rowmajor, labels);
}

FlowTable blob_table(size_t n, uint64_t seed) {
  Rng rng = Rng::derive(seed, "tree_blobs");
  std::vector<double> vals;
  std::vector<int> labels;
  for (size_t i = 0; i < n; ++i) {
    int y = static_cast<int>(rng.uniform_index(2));
    double cx = y == 0 ? 0.3 : 0.7;
    vals.push_back(cx + 0.15 * rng.gaussian());
    vals.push_back(rng.uniform());
    labels.push_back(y);
  }
  labels[0] = 0;
  labels[1] = 1;
  return make_table(2, vals, labels);
}

// exhaustive (feature, midpoint) Gini scan, written independently
struct OracleSplit {
  size_t feature;
  double threshold;
  double impurity;
};

OracleSplit brute_force_best_split(const FlowTable& t) {
  auto gini = [](double n0, double n1) {
    double total = n0 + n1;
    if (total == 0) return 0.0;
    double p0 = n0 / total, p1 = n1 / total;
    return 1.0 - p0 * p0 - p1 * p1;
  };
  OracleSplit best{0, 0, std::numeric_limits<double>::infinity()};
  for (size_t f = 0; f < t.n_features(); ++f) {
    std::vector<double> values = t.column(f);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 0; i + 1 < sorted.size(); ++i) {
      if (sorted[i] == sorted[i + 1]) continue;
      double thr = 0.5 * (sorted[i] + sorted[i + 1]);
      double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
      for (size_t r = 0; r < t.n_rows(); ++r) {
        bool left = values[r] <= thr;
        if (t.labels()[r] == 0) (left ? l0 : r0) += 1;
        else (left ? l1 : r1) += 1;
      }
      double imp = ((l0 + l1) * gini(l0, l1) + (r0 + r1) * gini(r0, r1)) / double(t.n_rows());
      if (imp < best.impurity) best = {f, thr, imp};
    }
  }
  return best;
}

}  // namespace

TEST(DecisionTree, SeparableDataGivesDepthOnePerfectTree) {
  FlowTable t = make_table(1, {0.1, 0.2, 0.3, 0.8, 0.9, 1.0}, {0, 0, 0, 1, 1, 1});
  DecisionTreeModel model;
  model.fit(t, {10, 1});
  EXPECT_EQ(model.depth(), 1);
  EXPECT_DOUBLE_EQ(training_accuracy(model, t), 1.0);
}

TEST(DecisionTree, PureTableIsSingleLeaf) {
  FlowTable t = make_table(1, {0.1, 0.5, 0.9}, {1, 1, 1});
  DecisionTreeModel model;
  model.fit(t, {10, 1});
  ASSERT_EQ(model.nodes().size(), 1u);
  EXPECT_EQ(model.nodes()[0].feature, -1);
  EXPECT_DOUBLE_EQ(model.nodes()[0].p1, 1.0);
}

TEST(DecisionTree, RootSplitMatchesBruteForce) {
  std::vector<double> vals = {
      0.1, 0.7,  //
      0.3, 0.2,  //
      0.2, 0.9,  //
      0.7, 0.4,  //
      0.8, 0.8,  //
      0.9, 0.1,  //
      0.4, 0.6,  //
      0.6, 0.3,  //
  };
  std::vector<int> labels = {0, 0, 0, 1, 1, 1, 0, 1};
  FlowTable t = make_table(2, vals, labels);
  DecisionTreeModel model;
  model.fit(t, {10, 1});
  OracleSplit oracle = brute_force_best_split(t);
  ASSERT_GE(model.nodes()[0].feature, 0);
  EXPECT_EQ(static_cast<size_t>(model.nodes()[0].feature), oracle.feature);
  EXPECT_NEAR(model.nodes()[0].threshold, oracle.threshold, 1e-12);
}

TEST(DecisionTree, StructureInvariantsHold) {
  FlowTable t = blob_table(300, 4);
  DecisionTreeModel model;
  model.fit(t, {6, 5});
  const auto& nodes = model.nodes();

  // child sample counts sum to the parent; every leaf respects min size;
  // every root-to-leaf path has consistent threshold constraints
  std::function<void(int, std::vector<std::pair<double, double>>)> walk =
      [&](int idx, std::vector<std::pair<double, double>> bounds) {
        const TreeNode& n = nodes[size_t(idx)];
        if (n.feature < 0) {
          EXPECT_GE(n.n_samples, 5u);
          EXPECT_GE(n.p1, 0.0);
          EXPECT_LE(n.p1, 1.0);
          return;
        }
        auto f = size_t(n.feature);
        EXPECT_GT(n.threshold, bounds[f].first);
        EXPECT_LT(n.threshold, bounds[f].second);
        EXPECT_EQ(nodes[size_t(n.left)].n_samples + nodes[size_t(n.right)].n_samples,
                  n.n_samples);
        auto left_bounds = bounds;
        left_bounds[f].second = n.threshold;
        auto right_bounds = bounds;
        right_bounds[f].first = n.threshold;
        walk(n.left, left_bounds);
        walk(n.right, right_bounds);
      };
  walk(0, {{-1e300, 1e300}, {-1e300, 1e300}});
}

TEST(DecisionTree, MaxDepthRespected) {
  FlowTable t = blob_table(400, 9);
  DecisionTreeModel model;
  model.fit(t, {3, 1});
  EXPECT_LE(model.depth(), 3);
}

TEST(DecisionTree, EmptyTableErrors) {
  DecisionTreeModel model;
  EXPECT_THROW(model.fit(FlowTable(), {10, 5}), Error);
}

TEST(RandomForest, SingleTreeNoBootstrapAllFeaturesReducesToDecisionTree) {
  FlowTable t = blob_table(200, 11);
  RandomForestConfig config;
  config.n_trees = 1;
  config.bootstrap = false;
  config.max_features = MaxFeatures::All;
  config.tree = {8, 2};
  RandomForestModel forest;
  forest.fit(t, config);

  DecisionTreeModel tree;
  tree.fit(t, {8, 2});

  for (size_t r = 0; r < t.n_rows(); ++r) {
    EXPECT_DOUBLE_EQ(forest.predict_proba_row(t.row(r)), tree.predict_proba_row(t.row(r)));
  }
}

TEST(RandomForest, ProbabilityIsMeanOfTreeProbabilities) {
  FlowTable t = blob_table(150, 13);
  RandomForestConfig config;
  config.n_trees = 15;
  config.seed = 3;
  RandomForestModel forest;
  forest.fit(t, config);
  for (size_t r = 0; r < 20; ++r) {
    double mean = 0.0;
    for (const auto& tree : forest.trees()) mean += tree.predict_proba_row(t.row(r));
    mean /= double(forest.trees().size());
    double p = forest.predict_proba_row(t.row(r));
    EXPECT_NEAR(p, mean, 1e-12);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(RandomForest, SeededTrainingIsReproducible) {
  FlowTable t = blob_table(250, 17);
  RandomForestConfig config;
  config.n_trees = 25;
  config.seed = 99;
  RandomForestModel a, b;
  a.fit(t, config);
  b.fit(t, config);
  EXPECT_EQ(a.save_state().dump(), b.save_state().dump());
  for (size_t r = 0; r < t.n_rows(); ++r) {
    EXPECT_DOUBLE_EQ(a.predict_proba_row(t.row(r)), b.predict_proba_row(t.row(r)));
  }
  RandomForestConfig other = config;
  other.seed = 100;
  RandomForestModel c;
  c.fit(t, other);
  EXPECT_NE(a.save_state().dump(), c.save_state().dump());
}
