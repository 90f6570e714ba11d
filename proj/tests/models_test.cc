#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "sitelens/error.h"
#include "sitelens/features.h"
#include "sitelens/logistic_regression.h"
#include "sitelens/metrics.h"
#include "sitelens/mlp.h"
#include "sitelens/model.h"
#include "sitelens/naive_bayes.h"
#include "sitelens/random_forest.h"
#include "sitelens/split.h"
#include "sitelens/synth.h"
#include "test_support.h"

namespace sitelens {
namespace {

using testing::MatrixFromRows;

DenseMatrix RandomMatrix(size_t rows, size_t cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  DenseMatrix m(rows, cols);
  for (double& v : m.data)
    v = n(rng);
  return m;
}

// --- split ----------------------------------------------------------------

TEST(Split, TenRowsGiveSixTwoTwoPerClassThreeOneOne) {
  std::vector<int> y = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  TrainTestSplit s = SplitDataset(y, 3);
  ASSERT_EQ(s.train.size(), 6u);
  ASSERT_EQ(s.validation.size(), 2u);
  ASSERT_EQ(s.test.size(), 2u);
  auto fakes = [&](const std::vector<size_t>& part) {
    return std::count_if(part.begin(), part.end(), [&](size_t i) { return y[i] == 1; });
  };
  EXPECT_EQ(fakes(s.train), 3);
  EXPECT_EQ(fakes(s.validation), 1);
  EXPECT_EQ(fakes(s.test), 1);

  std::vector<size_t> all;
  for (const auto* part : {&s.train, &s.validation, &s.test})
    all.insert(all.end(), part->begin(), part->end());
  std::sort(all.begin(), all.end());
  std::vector<size_t> expected(10);
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(all, expected);
}

TEST(Split, FullSizeDatasetAndDeterminism) {
  std::vector<int> y(1183, 0);
  y.resize(1820, 1);
  TrainTestSplit a = SplitDataset(y, 7);
  EXPECT_NEAR(double(a.train.size()), 1092.0, 1.0);
  EXPECT_EQ(a, SplitDataset(y, 7));
  EXPECT_NE(a, SplitDataset(y, 8));
}

TEST(Split, TooFewRowsPerClassThrows) {
  std::vector<int> y = {0, 0, 0, 0, 0, 1, 1, 1, 1};
  EXPECT_THROW(SplitDataset(y, 1), Error);
}

// --- Gaussian naive Bayes ------------------------------------------------

double LogNormalPdf(double x, double mean, double var) {
  return -0.5 * std::log(2 * M_PI * var) - (x - mean) * (x - mean) / (2 * var);
}

TEST(NaiveBayes, OneDimensionalPosteriorMatchesClosedForm) {
  DenseMatrix x = MatrixFromRows({{-1}, {0}, {1}, {9}, {10}, {11}});
  std::vector<int> y = {0, 0, 0, 1, 1, 1};
  GaussianNaiveBayes gnb = GaussianNaiveBayes::Train(x, y);
  const double var = 2.0 / 3.0;
  for (double probe : {5.01, 4.99, 5.0, 0.3, 7.2}) {
    double l0 = std::log(0.5) + LogNormalPdf(probe, 0.0, var);
    double l1 = std::log(0.5) + LogNormalPdf(probe, 10.0, var);
    double expected = 1.0 / (1.0 + std::exp(l0 - l1));
    double got = gnb.PredictProba(MatrixFromRows({{probe}}))[0];
    EXPECT_NEAR(got, expected, 1e-9) << probe;
  }
  EXPECT_GT(gnb.PredictProba(MatrixFromRows({{5.01}}))[0], 0.5);
}

TEST(NaiveBayes, SymmetricClassesGiveHalfAtMidpoint) {
  DenseMatrix x = MatrixFromRows({{-3, 1}, {-2, 2}, {-1, 3}, {1, 1}, {2, 2}, {3, 3}});
  std::vector<int> y = {0, 0, 0, 1, 1, 1};
  GaussianNaiveBayes gnb = GaussianNaiveBayes::Train(x, y);
  EXPECT_NEAR(gnb.PredictProba(MatrixFromRows({{0, 2}}))[0], 0.5, 1e-9);
}

TEST(NaiveBayes, ConstantFeatureUsesVarianceFloor) {
  DenseMatrix x = MatrixFromRows({{1}, {1}, {2}, {2}});
  std::vector<int> y = {0, 0, 1, 1};
  GaussianNaiveBayes gnb = GaussianNaiveBayes::Train(x, y);
  EXPECT_EQ(gnb.stats(0).variance[0], kVarianceFloor);
  std::vector<double> p = gnb.PredictProba(x);
  for (double v : p)
    EXPECT_TRUE(std::isfinite(v));
  EXPECT_LT(p[0], 0.5);
  EXPECT_GT(p[3], 0.5);
}

// --- logistic regression -------------------------------------------------

TEST(LogisticRegression, SeparableCaseReachesFullAccuracy) {
  DenseMatrix x = MatrixFromRows(
      {{-2, -1}, {-1, -2}, {-1.5, -0.5}, {-0.5, -1.2}, {2, 1}, {1, 2}, {1.5, 0.7}, {0.6, 1.1}});
  std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
  LogisticRegression lr = LogisticRegression::Train(x, y);
  EXPECT_EQ(Accuracy(lr.PredictProba(x), y), 1.0);
}

TEST(LogisticRegression, ZeroModelPredictsHalf) {
  LogisticRegression lr({0, 0, 0}, 0);
  for (double p : lr.PredictProba(RandomMatrix(7, 3, 1)))
    EXPECT_EQ(p, 0.5);
}

TEST(LogisticRegression, RejectsNonFiniteAndWidthMismatch) {
  DenseMatrix x = MatrixFromRows({{0, 1}, {1, NAN}});
  std::vector<int> y = {0, 1};
  EXPECT_THROW(LogisticRegression::Train(x, y), Error);
  LogisticRegression lr({1, 1}, 0);
  EXPECT_THROW(lr.PredictProba(RandomMatrix(2, 3, 1)), Error);
}

// --- random forest -------------------------------------------------------

TEST(RandomForest, StumpSplitsOnInformativeFeature) {
  // Feature 0 equals the label; feature 1 is balanced within each class.
  DenseMatrix x = MatrixFromRows(
      {{0, 0}, {0, 1}, {0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 1}, {1, 0}});
  std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
  RandomForestParams p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.max_features = 2;
  p.bootstrap = false;
  RandomForest rf = RandomForest::Train(x, y, p, 5);
  const auto& root = rf.trees()[0].nodes()[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_EQ(rf.PredictProba(x), (std::vector<double>{0, 0, 0, 0, 1, 1, 1, 1}));
  // Gini of the two candidate splits, enumerated by hand.
  EXPECT_EQ(GiniImpurity(4, 0), 0.0);
  EXPECT_EQ(GiniImpurity(2, 2), 0.5);
}

TEST(RandomForest, UnanimousFakeVotesGiveOne) {
  DecisionTree::Node leaf;
  leaf.counts = {0, 6};
  RandomForest rf({DecisionTree({leaf}), DecisionTree({leaf}), DecisionTree({leaf})}, 2);
  for (double p : rf.PredictProba(RandomMatrix(5, 2, 3)))
    EXPECT_EQ(p, 1.0);
}

class ForestOnNoise : public ::testing::Test {
 protected:
  void SetUp() override {
    x_ = RandomMatrix(120, 6, 11);
    for (size_t r = 0; r < x_.rows; ++r)
      y_.push_back(x_.at(r, 0) + 0.5 * x_.at(r, 1) > 0 ? 1 : 0);
    params_.n_trees = 15;
  }
  DenseMatrix x_;
  std::vector<int> y_;
  RandomForestParams params_;
};

TEST_F(ForestOnNoise, ProbabilitiesLieWithinTreeVotes) {
  RandomForest rf = RandomForest::Train(x_, y_, params_, 2);
  DenseMatrix probe = RandomMatrix(40, 6, 12);
  std::vector<double> p = rf.PredictProba(probe);
  for (size_t r = 0; r < probe.rows; ++r) {
    double lo = 1, hi = 0;
    for (const DecisionTree& t : rf.trees()) {
      double v = t.PredictProba(probe.row(r));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_GE(p[r], lo - 1e-15);
    EXPECT_LE(p[r], hi + 1e-15);
  }
}

TEST_F(ForestOnNoise, ThreadCountDoesNotChangeTheForest) {
  params_.threads = 1;
  RandomForest a = RandomForest::Train(x_, y_, params_, 4);
  params_.threads = 4;
  RandomForest b = RandomForest::Train(x_, y_, params_, 4);
  EXPECT_EQ(a.ToJson(), b.ToJson());
  EXPECT_EQ(RandomForest::FromJson(a.ToJson()).PredictProba(x_), a.PredictProba(x_));
}

TEST_F(ForestOnNoise, NodeCountsAddUp) {
  RandomForest rf = RandomForest::Train(x_, y_, params_, 9);
  for (const DecisionTree& t : rf.trees()) {
    const auto& nodes = t.nodes();
    EXPECT_EQ(nodes[0].counts[0] + nodes[0].counts[1], int64_t(x_.rows));
    for (const auto& n : nodes) {
      if (n.is_leaf())
        continue;
      EXPECT_EQ(n.counts[0], nodes[n.left].counts[0] + nodes[n.right].counts[0]);
      EXPECT_EQ(n.counts[1], nodes[n.left].counts[1] + nodes[n.right].counts[1]);
    }
  }
}

// --- metrics -------------------------------------------------------------

double PairwiseAuc(const std::vector<double>& s, const std::vector<int>& y) {
  double concordant = 0;
  int pairs = 0;
  for (size_t i = 0; i < s.size(); ++i)
    for (size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        ++pairs;
        concordant += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return concordant / pairs;
}

TEST(Auc, MatchesExhaustivePairOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    size_t n = 2 + rng() % 11;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (size_t i = 0; i < n; ++i) {
      s[i] = double(rng() % 5) / 4.0;
      y[i] = int(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(RocAuc(s, y), PairwiseAuc(s, y), 1e-12);
  }
}

TEST(Auc, TiesAndPerfectSeparation) {
  std::vector<int> y = {0, 1, 0, 1, 1};
  EXPECT_EQ(RocAuc(std::vector<double>(5, 0.3), y), 0.5);
  std::vector<double> s = {0.1, 0.9, 0.2, 0.8, 0.7};
  EXPECT_EQ(RocAuc(s, y), 1.0);
  Metrics m = Evaluate(s, y);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_THROW(RocAuc(s, std::vector<int>(5, 1)), Error);
}

TEST(Auc, InvariantUnderIncreasingTransform) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(30), t(30);
    std::vector<int> y(30);
    for (size_t i = 0; i < 30; ++i) {
      s[i] = std::round(u(rng) * 10) / 10;
      y[i] = i % 3 == 0;
      t[i] = std::exp(3 * s[i]) + s[i] * s[i] * s[i];
    }
    EXPECT_NEAR(RocAuc(s, y), RocAuc(t, y), 1e-12);
  }
}

TEST(Metrics, WeightedEqualsMacroWhenSupportsAreEqual) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> s(20);
    std::vector<int> y(20);
    for (size_t i = 0; i < 20; ++i) {
      y[i] = i % 2;
      s[i] = std::clamp(u(rng) + (y[i] ? 0.2 : -0.2), 0.0, 1.0);
    }
    double prec[2], rec[2], f1[2];
    for (int c = 0; c < 2; ++c) {
      int tp = 0, fp = 0, fn = 0;
      for (size_t i = 0; i < 20; ++i) {
        int pred = s[i] >= 0.5;
        tp += pred == c && y[i] == c;
        fp += pred == c && y[i] != c;
        fn += pred != c && y[i] == c;
      }
      prec[c] = tp + fp ? double(tp) / (tp + fp) : 0.0;
      rec[c] = tp + fn ? double(tp) / (tp + fn) : 0.0;
      f1[c] = prec[c] + rec[c] > 0 ? 2 * prec[c] * rec[c] / (prec[c] + rec[c]) : 0.0;
    }
    Metrics m = Evaluate(s, y);
    EXPECT_NEAR(m.precision, (prec[0] + prec[1]) / 2, 1e-12);
    EXPECT_NEAR(m.recall, (rec[0] + rec[1]) / 2, 1e-12);
    EXPECT_NEAR(m.f1, (f1[0] + f1[1]) / 2, 1e-12);
    EXPECT_NEAR(m.tp_rate, m.recall, 1e-12);
  }
}

// --- MLP -----------------------------------------------------------------

TEST(Mlp, GradientsMatchCentralDifferences) {
  MlpParams p;
  p.hidden_units = 8;
  for (uint64_t seed : {1, 2, 3}) {
    Mlp mlp(5, p, seed);
    DenseMatrix x = RandomMatrix(4, 5, 100 + seed);
    std::vector<int> y = {0, 1, 1, 0};
    EXPECT_LT(mlp.FiniteDifferenceCheck(x, y), 1e-4) << seed;
  }
}

TEST(Mlp, ZeroInputBatchHasFiniteGradients) {
  MlpParams p;
  p.hidden_units = 8;
  Mlp mlp(5, p, 1);
  std::vector<double> g;
  std::vector<int> y = {0, 1, 0, 1};
  double loss = mlp.LossAndGradient(DenseMatrix(4, 5), y, &g);
  EXPECT_TRUE(std::isfinite(loss));
  ASSERT_EQ(g.size(), mlp.TrainableParameterCount());
  for (double v : g)
    EXPECT_TRUE(std::isfinite(v));
}

TEST(Mlp, ParameterCountForThirtyFiveInputs) {
  EXPECT_EQ(Mlp(35, MlpParams{}, 1).TrainableParameterCount(), 832u);
}

class SmallMlp : public ::testing::Test {
 protected:
  void SetUp() override {
    x_ = RandomMatrix(80, 4, 31);
    for (size_t r = 0; r < x_.rows; ++r)
      y_.push_back(x_.at(r, 0) - x_.at(r, 2) > 0);
    params_.epochs = 5;
    params_.rounds = 2;
    params_.hidden_units = 6;
  }
  DenseMatrix x_;
  std::vector<int> y_;
  MlpParams params_;
};

TEST_F(SmallMlp, TrainingIsDeterministic) {
  Mlp::TrainingReport ra, rb;
  Mlp a = Mlp::Train(x_, y_, params_, 3, nullptr, {}, &ra);
  Mlp b = Mlp::Train(x_, y_, params_, 3, nullptr, {}, &rb);
  EXPECT_EQ(a.ToJson(), b.ToJson());
  EXPECT_EQ(ra.round_accuracy, rb.round_accuracy);
  ASSERT_EQ(ra.round_accuracy.size(), 2u);
  EXPECT_NE(Mlp::Train(x_, y_, params_, 4).ToJson(), a.ToJson());
}

TEST_F(SmallMlp, InferenceIgnoresRowOrderAndSurvivesJson) {
  Mlp mlp = Mlp::Train(x_, y_, params_, 3);
  std::vector<double> p = mlp.PredictProba(x_);
  std::vector<size_t> order(x_.rows);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(1));
  std::vector<double> q = mlp.PredictProba(x_.SelectRows(order));
  for (size_t i = 0; i < order.size(); ++i) {
    EXPECT_EQ(q[i], p[order[i]]);
    EXPECT_GE(p[i], 0.0);
    EXPECT_LE(p[i], 1.0);
  }
  EXPECT_EQ(mlp.PredictProba(x_), p);
  EXPECT_EQ(Mlp::FromJson(mlp.ToJson()).PredictProba(x_), p);
}

// --- bundled model ---------------------------------------------------------

class BundledModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SynthConfig c;
    c.n_real = 70;
    c.n_fake = 40;
    c.seed = 5;
    auto records = GenerateSynthetic(c);
    matrix_ = new FeatureMatrix(
        ExtractMatrix(records, FeatureCatalog::Default(), CategoryList::Default()));
  }
  static void TearDownTestSuite() { delete matrix_; }
  static FeatureMatrix* matrix_;
};
FeatureMatrix* BundledModel::matrix_ = nullptr;

TEST_F(BundledModel, JsonRoundTripPreservesPredictions) {
  for (ModelKind kind : {ModelKind::kRandomForest, ModelKind::kLogisticRegression,
                         ModelKind::kNaiveBayes, ModelKind::kMlp}) {
    TrainOptions o;
    o.kind = kind;
    o.rf.n_trees = 10;
    o.mlp.epochs = 3;
    o.mlp.rounds = 2;
    TrainedModel m = TrainedModel::Train(*matrix_, o);
    EXPECT_EQ(m.features().size(), 35u);
    TrainedModel back = TrainedModel::FromJson(m.ToJson());
    EXPECT_EQ(back.PredictProba(*matrix_), m.PredictProba(*matrix_)) << ModelKindName(kind);
    EXPECT_EQ(back.ToJson(), m.ToJson());
  }
}

TEST_F(BundledModel, RealtimeModeDropsOfflineFeatures) {
  TrainOptions o;
  o.kind = ModelKind::kLogisticRegression;
  o.mode = FeatureMode::kRealtime;
  TrainedModel m = TrainedModel::Train(*matrix_, o);
  EXPECT_EQ(m.features().size(), 27u);
  for (const std::string& f : m.features())
    EXPECT_TRUE(FeatureCatalog::Default().at(*FeatureCatalog::Default().IndexOf(f))
                    .realtime_available);
}

TEST_F(BundledModel, EvaluateRefusesAForeignMatrix) {
  TrainOptions o;
  o.kind = ModelKind::kNaiveBayes;
  TrainedModel m = TrainedModel::Train(*matrix_, o);
  Metrics ok = m.EvaluateTest(*matrix_);
  EXPECT_GE(ok.auc, 0.0);
  EXPECT_LE(ok.auc, 1.0);

  SynthConfig c;
  c.n_real = 70;
  c.n_fake = 40;
  c.seed = 6;
  auto other_records = GenerateSynthetic(c);
  FeatureMatrix other =
      ExtractMatrix(other_records, FeatureCatalog::Default(), CategoryList::Default());
  try {
    m.EvaluateTest(other);
    FAIL() << "expected an invariant error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvariant);
  }
}

TEST_F(BundledModel, UnlabeledRowsAreRejected) {
  FeatureMatrix copy = *matrix_;
  copy.rows[3].label.reset();
  EXPECT_THROW(BinaryLabels(copy), Error);
  EXPECT_THROW(ParseModelKind("svm"), Error);
}

}  // namespace
}  // namespace sitelens
