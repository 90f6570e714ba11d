#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "sitelens/error.h"
#include "sitelens/features.h"
#include "sitelens/logistic_regression.h"
#include "sitelens/select.h"
#include "sitelens/synth.h"
#include "test_support.h"

namespace sitelens {
namespace {

struct Toy {
  DenseMatrix x;
  std::vector<int> y;
};

// |informative| columns shift with the label; the rest are pure noise.
Toy MakeToy(size_t rows, size_t cols, size_t informative, double shift, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Toy t{DenseMatrix(rows, cols), {}};
  for (size_t r = 0; r < rows; ++r) {
    int label = int(r % 2);
    t.y.push_back(label);
    for (size_t c = 0; c < cols; ++c)
      t.x.at(r, c) = n(rng) + (c < informative ? (label ? shift : -shift) : 0.0);
  }
  return t;
}

std::vector<std::string> ColumnNames(size_t n) {
  std::vector<std::string> names;
  for (size_t i = 0; i < n; ++i)
    names.push_back("f" + std::to_string(i));
  return names;
}

bool IsPermutation(std::vector<size_t> v, size_t n) {
  std::sort(v.begin(), v.end());
  for (size_t i = 0; i < v.size(); ++i)
    if (v[i] != i)
      return false;
  return v.size() == n;
}

TEST(Rfe, ConstantFeatureIsEliminatedFirst) {
  DenseMatrix x = testing::MatrixFromRows({{0, 3}, {1, 3}, {0, 3}, {1, 3}, {0, 3}, {1, 3}});
  // Standardized data would hold zeros for the constant column.
  for (size_t r = 0; r < x.rows; ++r)
    x.at(r, 1) = 0.0;
  std::vector<int> y = {0, 1, 0, 1, 0, 1};
  EXPECT_EQ(RecursiveFeatureElimination(x, y), (std::vector<size_t>{0, 1}));
}

TEST(Rfe, EachRoundDropsTheWeakestRefitCoefficient) {
  Toy t = MakeToy(60, 5, 1, 1.5, 17);
  std::vector<size_t> ranking = RecursiveFeatureElimination(t.x, t.y);
  ASSERT_TRUE(IsPermutation(ranking, 5));
  EXPECT_EQ(ranking[0], 0u);

  // Replay the elimination order and confirm each choice against a fresh fit.
  std::vector<size_t> surviving(5);
  std::iota(surviving.begin(), surviving.end(), 0);
  for (size_t round = 0; round < 5; ++round) {
    size_t removed = ranking[4 - round];
    LogisticRegression fit = LogisticRegression::Train(t.x.SelectColumns(surviving), t.y);
    size_t weakest = 0;
    for (size_t i = 1; i < surviving.size(); ++i)
      if (std::abs(fit.weights()[i]) < std::abs(fit.weights()[weakest]))
        weakest = i;
    EXPECT_EQ(surviving[weakest], removed) << "round " << round;
    surviving.erase(surviving.begin() + ptrdiff_t(weakest));
  }
}

TEST(Rfe, SingleRoundFollowsCoefficientMagnitude) {
  Toy t = MakeToy(80, 6, 3, 0.8, 23);
  std::vector<size_t> ranking = RecursiveFeatureElimination(t.x, t.y, 6);
  LogisticRegression fit = LogisticRegression::Train(t.x, t.y);
  std::vector<size_t> expected(6);
  std::iota(expected.begin(), expected.end(), 0);
  std::sort(expected.begin(), expected.end(), [&](size_t a, size_t b) {
    double wa = std::abs(fit.weights()[a]), wb = std::abs(fit.weights()[b]);
    return wa != wb ? wa > wb : a > b;
  });
  EXPECT_EQ(ranking, expected);
}

TEST(Rfe, RankingIsAPermutationForAnyStep) {
  Toy t = MakeToy(50, 12, 4, 0.6, 3);
  for (size_t step : {1, 2, 5, 12, 40}) {
    std::vector<size_t> r = RecursiveFeatureElimination(t.x, t.y, step);
    EXPECT_TRUE(IsPermutation(r, 12)) << step;
  }
  EXPECT_EQ(RecursiveFeatureElimination(t.x, t.y), RecursiveFeatureElimination(t.x, t.y));
}

TEST(Rfe, RejectsSingleClassAndZeroStep) {
  Toy t = MakeToy(10, 3, 1, 1.0, 1);
  std::vector<int> ones(10, 1);
  EXPECT_THROW(RecursiveFeatureElimination(t.x, ones), Error);
  EXPECT_THROW(RecursiveFeatureElimination(t.x, t.y, 0), Error);
}

TEST(Sweep, FullGridSelectsEverything) {
  Toy train = MakeToy(60, 7, 2, 1.0, 4), val = MakeToy(30, 7, 2, 1.0, 5);
  std::vector<size_t> ranking = RecursiveFeatureElimination(train.x, train.y);
  std::vector<size_t> grid = {7};
  std::vector<std::string> names = ColumnNames(7);
  SelectionResult r = SweepK(train.x, train.y, val.x, val.y, ranking, grid, names);
  EXPECT_EQ(r.chosen_k, 7u);
  EXPECT_EQ(r.selected.size(), 7u);
  EXPECT_EQ(std::set<std::string>(r.selected.begin(), r.selected.end()),
            std::set<std::string>(names.begin(), names.end()));
}

TEST(Sweep, ThreeSignalColumnsChooseTheSmallerK) {
  Toy train = MakeToy(200, 12, 3, 2.5, 6), val = MakeToy(100, 12, 3, 2.5, 7);
  std::vector<size_t> ranking = RecursiveFeatureElimination(train.x, train.y);
  std::vector<size_t> grid = {5, 10};
  SelectionResult r = SweepK(train.x, train.y, val.x, val.y, ranking, grid, ColumnNames(12));
  ASSERT_EQ(r.sweep.size(), 2u);
  EXPECT_EQ(r.sweep[0].accuracy, 1.0);
  EXPECT_EQ(r.sweep[1].accuracy, 1.0);
  EXPECT_EQ(r.chosen_k, 5u);
  std::set<std::string> top3(r.ranking.begin(), r.ranking.begin() + 3);
  EXPECT_EQ(top3, (std::set<std::string>{"f0", "f1", "f2"}));
}

TEST(Sweep, DuplicatedColumnAddsNothingToTheTopSet) {
  Toy train = MakeToy(200, 6, 2, 1.2, 8), val = MakeToy(200, 6, 2, 1.2, 9);
  std::vector<size_t> ranking = RecursiveFeatureElimination(train.x, train.y);
  for (size_t k = 1; k <= 6; ++k) {
    std::vector<size_t> top(ranking.begin(), ranking.begin() + ptrdiff_t(k));
    auto accuracy = [&](const std::vector<size_t>& cols) {
      LogisticRegression fit = LogisticRegression::Train(train.x.SelectColumns(cols), train.y);
      return Accuracy(fit.PredictProba(val.x.SelectColumns(cols)), val.y);
    };
    std::vector<size_t> with_copy = top;
    with_copy.push_back(top.front());
    EXPECT_NEAR(accuracy(top), accuracy(with_copy), 0.01) << k;
  }
}

TEST(Sweep, RejectsBadInput) {
  Toy train = MakeToy(20, 3, 1, 1.0, 1);
  std::vector<size_t> ranking = {0, 1, 2}, bad_ranking = {0, 0, 2};
  std::vector<size_t> out_of_range = {4}, empty;
  std::vector<std::string> names = ColumnNames(3);
  EXPECT_THROW(SweepK(train.x, train.y, train.x, train.y, ranking, out_of_range, names), Error);
  EXPECT_THROW(SweepK(train.x, train.y, train.x, train.y, ranking, empty, names), Error);
  std::vector<size_t> grid = {2};
  EXPECT_THROW(SweepK(train.x, train.y, train.x, train.y, bad_ranking, grid, names), Error);
}

TEST(Grid, ParsesRangesAndLists) {
  EXPECT_EQ(ParseGrid("5:187:5", 187), DefaultGrid(187));
  EXPECT_EQ(DefaultGrid(187).size(), 38u);
  EXPECT_EQ(DefaultGrid(187).back(), 187u);
  EXPECT_EQ(ParseGrid("10,5,10,35", 187), (std::vector<size_t>{5, 10, 35}));
  EXPECT_EQ(ParseGrid("3:9:4", 187), (std::vector<size_t>{3, 7, 9}));
  for (const char* bad : {"0:10:5", "5:188:5", "5:10", "a,b", "5:10:0", "", "200"})
    EXPECT_THROW(ParseGrid(bad, 187), Error) << bad;
}

TEST(Selection, JsonRoundTripAndPrefixCheck) {
  SelectionResult r;
  r.ranking = {"b", "a", "c"};
  r.chosen_k = 2;
  r.selected = {"b", "a"};
  r.sweep = {{1, 0.5}, {2, 0.75}};
  r.split_seed = 7;
  r.matrix_hash = "abc";
  SelectionResult back = SelectionResult::FromJson(r.ToJson());
  EXPECT_EQ(back.ToJson(), r.ToJson());
  nlohmann::json broken = r.ToJson();
  broken["selected"] = {"a", "b"};
  EXPECT_THROW(SelectionResult::FromJson(broken), Error);
}

// Full-size calibrated data; ranking it takes several seconds, so the suite
// shares one run.
class CalibratedSelection : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    auto records = GenerateSynthetic(SynthConfig{});
    FeatureMatrix m = ExtractMatrix(records, FeatureCatalog::Default(), CategoryList::Default());
    result_ = new SelectionResult(SelectFeatures(m, 7, DefaultGrid(187)));
  }
  static void TearDownTestSuite() { delete result_; }
  static SelectionResult* result_;
};
SelectionResult* CalibratedSelection::result_ = nullptr;

TEST_F(CalibratedSelection, ChoosesAtMostFiftyFeatures) {
  EXPECT_LE(result_->chosen_k, 50u);
  EXPECT_EQ(result_->ranking.size(), 187u);
  EXPECT_EQ(std::set<std::string>(result_->ranking.begin(), result_->ranking.end()).size(),
            187u);
}

TEST_F(CalibratedSelection, CurveRisesThenStaysNearTheBest) {
  double best = 0;
  for (const SweepPoint& p : result_->sweep)
    best = std::max(best, p.accuracy);
  for (const SweepPoint& p : result_->sweep) {
    if (p.k < result_->chosen_k)
      EXPECT_LT(p.accuracy, best - kSweepTolerance) << p.k;
    else
      EXPECT_GT(p.accuracy, best - 0.06) << p.k;
  }
}

// Synthetic data only carries class signal in the calibrated quantities, so
// the reference ranking cannot be recovered; kept for manual runs.
TEST_F(CalibratedSelection, DISABLED_TopThirtyFiveOverlapsReferenceList) {
  std::set<std::string> reference(kDefaultTopFeatures.begin(), kDefaultTopFeatures.end());
  size_t overlap = 0;
  for (size_t i = 0; i < 35; ++i)
    overlap += reference.count(result_->ranking[i]);
  EXPECT_GE(overlap, 30u);
}

}  // namespace
}  // namespace sitelens
