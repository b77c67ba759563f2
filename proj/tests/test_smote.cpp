#include "kldetect/smote.hpp"

#include <gtest/gtest.h>

#include "kldetect/rng.hpp"
#include "oracles.hpp"

using namespace kldetect;

namespace {

FlowTable two_feature_table(const std::vector<std::pair<double, double>>& points,
                            const std::vector<int>& labels) {
  std::vector<double> values;
  for (auto [a, b] : points) {
    values.push_back(a);
    values.push_back(b);
  }
  return FlowTable({"x", "y"}, values, labels);
}

// every synthetic row must lie on a segment between some minority row and
// one of its brute-force k nearest minority neighbors
void check_parentage(const FlowTable& before, const FlowTable& after, size_t k, double tol) {
  int minority = before.class_counts()[1] <= before.class_counts()[0] ? 1 : 0;
  std::vector<std::vector<double>> minority_points;
  for (size_t r = 0; r < before.n_rows(); ++r) {
    if (before.labels()[r] == minority) {
      auto row = before.row(r);
      minority_points.emplace_back(row.begin(), row.end());
    }
  }
  for (size_t r = before.n_rows(); r < after.n_rows(); ++r) {
    ASSERT_EQ(after.labels()[r], minority);
    auto synth = after.row(r);
    bool found = false;
    for (size_t i = 0; i < minority_points.size() && !found; ++i) {
      for (size_t j : oracles::knn_candidates(minority_points, i, k)) {
        if (oracles::on_segment(synth, minority_points[i], minority_points[j], tol)) {
          found = true;
          break;
        }
      }
    }
    EXPECT_TRUE(found) << "synthetic row " << r << " has no k-NN parent pair";
  }
}

}  // namespace

TEST(Smote, SyntheticPointLiesOnSegment) {
  FlowTable t = two_feature_table(
      {{0, 0}, {1, 1}, {5, 5}, {6, 6}, {7, 7}, {8, 8}, {9, 9}}, {1, 1, 0, 0, 0, 0, 0});
  SmoteInfo info;
  FlowTable out = smote(t, {1, 1.0, 3}, &info);
  EXPECT_EQ(info.k_used, 1u);
  ASSERT_EQ(out.class_counts()[1], out.class_counts()[0]);
  for (size_t r = t.n_rows(); r < out.n_rows(); ++r) {
    double x = out.at(r, 0), y = out.at(r, 1);
    EXPECT_NEAR(x, y, 1e-12);  // on the segment (0,0)-(1,1)
    EXPECT_GE(x, -1e-12);
    EXPECT_LE(x, 1.0 + 1e-12);
  }
}

TEST(Smote, BalancesClassCountsAtRatioOne) {
  std::vector<std::pair<double, double>> pts;
  std::vector<int> labels;
  Rng rng = Rng::derive(1, "smote_balance");
  for (int i = 0; i < 10; ++i) {
    pts.push_back({rng.uniform(), rng.uniform()});
    labels.push_back(0);
  }
  for (int i = 0; i < 4; ++i) {
    pts.push_back({rng.uniform() + 2.0, rng.uniform()});
    labels.push_back(1);
  }
  FlowTable out = smote(two_feature_table(pts, labels), {5, 1.0, 7});
  auto counts = out.class_counts();
  EXPECT_EQ(counts[0], 10u);
  EXPECT_EQ(counts[1], 10u);
}

TEST(Smote, PartialRatioAndMajorityUntouched) {
  std::vector<std::pair<double, double>> pts;
  std::vector<int> labels;
  Rng rng = Rng::derive(2, "smote_partial");
  for (int i = 0; i < 20; ++i) {
    pts.push_back({rng.uniform(), rng.uniform()});
    labels.push_back(i < 15 ? 0 : 1);
  }
  FlowTable t = two_feature_table(pts, labels);
  FlowTable out = smote(t, {3, 0.8, 11});
  // target = round(0.8 * 15) = 12 minority rows
  EXPECT_EQ(out.class_counts()[1], 12u);
  EXPECT_EQ(out.class_counts()[0], 15u);
  // original rows pass through bit-exact, in order
  for (size_t r = 0; r < t.n_rows(); ++r) {
    EXPECT_EQ(out.row_hash(r), t.row_hash(r));
  }
}

TEST(Smote, SyntheticRowsHaveBruteForceParents) {
  std::vector<std::pair<double, double>> pts;
  std::vector<int> labels;
  Rng rng = Rng::derive(3, "smote_parentage");
  for (int i = 0; i < 14; ++i) {
    pts.push_back({rng.uniform(0, 4), rng.uniform(0, 4)});
    labels.push_back(0);
  }
  for (int i = 0; i < 6; ++i) {
    pts.push_back({rng.uniform(5, 9), rng.uniform(5, 9)});
    labels.push_back(1);
  }
  FlowTable t = two_feature_table(pts, labels);
  FlowTable out = smote(t, {3, 1.0, 1234});
  check_parentage(t, out, 3, 1e-9);
}

TEST(Smote, DeterministicGivenSeed) {
  std::vector<std::pair<double, double>> pts;
  std::vector<int> labels;
  Rng rng = Rng::derive(4, "smote_det");
  for (int i = 0; i < 30; ++i) {
    pts.push_back({rng.uniform(), rng.uniform()});
    labels.push_back(i % 3 == 0 ? 1 : 0);
  }
  FlowTable t = two_feature_table(pts, labels);
  FlowTable a = smote(t, {5, 1.0, 77});
  FlowTable b = smote(t, {5, 1.0, 77});
  EXPECT_EQ(a.features(), b.features());
  FlowTable c = smote(t, {5, 1.0, 78});
  EXPECT_NE(c.features(), a.features());
}

TEST(Smote, MinorityTooSmallErrors) {
  FlowTable t = two_feature_table({{0, 0}, {1, 1}, {2, 2}}, {0, 0, 1});
  try {
    smote(t, {1, 1.0, 0});
    FAIL() << "expected MinorityTooSmall";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MinorityTooSmall);
  }
}

TEST(Smote, KClampedWithWarningNotError) {
  FlowTable t = two_feature_table({{0, 0}, {1, 1}, {2, 0}, {5, 5}, {6, 6}, {7, 7}, {8, 8}},
                                  {1, 1, 1, 0, 0, 0, 0});
  SmoteInfo info;
  FlowTable out = smote(t, {10, 1.0, 5}, &info);
  EXPECT_TRUE(info.k_clamped);
  EXPECT_EQ(info.k_used, 2u);  // minority_count - 1
  EXPECT_EQ(out.class_counts()[1], out.class_counts()[0]);
}

TEST(Smote, AlreadyBalancedIsIdentity) {
  FlowTable t = two_feature_table({{0, 0}, {1, 1}, {2, 2}, {3, 3}}, {0, 0, 1, 1});
  FlowTable out = smote(t, {1, 1.0, 9});
  EXPECT_EQ(out.n_rows(), t.n_rows());
  EXPECT_EQ(out.features(), t.features());
}
