#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "sitelens/preprocess.h"

namespace sitelens {

struct RandomForestParams {
  int n_trees = 100;
  // 0 means floor(sqrt(d)), at least 1.
  int max_features = 0;
  // 0 means unlimited.
  int max_depth = 0;
  int min_samples_leaf = 1;
  bool bootstrap = true;
  // 0 means std::thread::hardware_concurrency(). Results do not depend on it.
  int threads = 0;

  nlohmann::json ToJson() const;
  static RandomForestParams FromJson(const nlohmann::json& json);
};

// CART classification tree grown on Gini impurity. Each node keeps the class
// counts of the training samples that reached it.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<int64_t, 2> counts{};

    bool is_leaf() const { return feature < 0; }
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  // |samples| indexes rows of |x| and may repeat (bootstrap).
  static DecisionTree Grow(const DenseMatrix& x, std::span<const int> y,
                           std::vector<size_t> samples, const RandomForestParams& params,
                           uint64_t seed);

  // Fraction of class-1 samples in the leaf reached by |row|.
  double PredictProba(const double* row) const;

  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::vector<Node> nodes_;
};

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(std::vector<DecisionTree> trees, size_t n_features)
      : trees_(std::move(trees)), n_features_(n_features) {}

  // Tree i is grown from seed + i, so the forest is identical for any thread
  // count.
  static RandomForest Train(const DenseMatrix& x, std::span<const int> y,
                            const RandomForestParams& params, uint64_t seed);

  // Mean of the per-tree leaf probabilities.
  std::vector<double> PredictProba(const DenseMatrix& x) const;

  const std::vector<DecisionTree>& trees() const { return trees_; }

  nlohmann::json ToJson() const;
  static RandomForest FromJson(const nlohmann::json& json);

 private:
  std::vector<DecisionTree> trees_;
  size_t n_features_ = 0;
};

double GiniImpurity(double class0, double class1);

}  // namespace sitelens
