#include "sitelens/random_forest.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "sitelens/error.h"
#include "sitelens/logistic_regression.h"

namespace sitelens {
namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const DenseMatrix& x, std::span<const int> y, const RandomForestParams& params,
              uint64_t seed)
      : x_(x), y_(y), params_(params), rng_(seed) {
    max_features_ = params.max_features > 0
                        ? std::min<size_t>(params.max_features, x.cols)
                        : std::max<size_t>(1, static_cast<size_t>(std::sqrt(double(x.cols))));
    features_.resize(x.cols);
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<DecisionTree::Node> Build(std::vector<size_t> samples) {
    nodes_.clear();
    Grow(samples, 0);
    return std::move(nodes_);
  }

 private:
  int Grow(std::vector<size_t>& samples, int depth) {
    int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::array<int64_t, 2> counts{};
    for (size_t s : samples)
      ++counts[y_[s]];
    nodes_[index].counts = counts;

    bool pure = counts[0] == 0 || counts[1] == 0;
    bool depth_reached = params_.max_depth > 0 && depth >= params_.max_depth;
    if (pure || depth_reached || samples.size() < 2 * size_t(params_.min_samples_leaf))
      return index;

    SplitChoice best = FindSplit(samples, counts);
    if (best.feature < 0)
      return index;

    std::vector<size_t> left, right;
    for (size_t s : samples)
      (x_.at(s, best.feature) <= best.threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();

    nodes_[index].feature = best.feature;
    nodes_[index].threshold = best.threshold;
    int l = Grow(left, depth + 1);
    nodes_[index].left = l;
    int r = Grow(right, depth + 1);
    nodes_[index].right = r;
    return index;
  }

  // Draws max_features candidates without replacement. When none of them
  // admits a split, keeps drawing from the remaining features.
  SplitChoice FindSplit(const std::vector<size_t>& samples, const std::array<int64_t, 2>& counts) {
    SplitChoice best;
    const double n = static_cast<double>(samples.size());
    best.impurity = GiniImpurity(double(counts[0]), double(counts[1]));
    const double parent = best.impurity;

    std::vector<std::pair<double, int>> column(samples.size());
    size_t drawn = 0;
    while (drawn < features_.size()) {
      size_t pick = std::uniform_int_distribution<size_t>(drawn, features_.size() - 1)(rng_);
      std::swap(features_[drawn], features_[pick]);
      int feature = static_cast<int>(features_[drawn]);
      ++drawn;

      for (size_t i = 0; i < samples.size(); ++i)
        column[i] = {x_.at(samples[i], feature), y_[samples[i]]};
      std::sort(column.begin(), column.end());

      std::array<double, 2> left{};
      const size_t min_leaf = static_cast<size_t>(params_.min_samples_leaf);
      for (size_t i = 0; i + 1 < column.size(); ++i) {
        left[column[i].second] += 1.0;
        if (column[i].first == column[i + 1].first)
          continue;
        size_t n_left = i + 1;
        if (n_left < min_leaf || column.size() - n_left < min_leaf)
          continue;
        double l_total = double(n_left), r_total = n - l_total;
        double impurity =
            (l_total * GiniImpurity(left[0], left[1]) +
             r_total * GiniImpurity(double(counts[0]) - left[0], double(counts[1]) - left[1])) /
            n;
        if (impurity < best.impurity - 1e-12 ||
            (best.feature < 0 && impurity <= parent)) {
          best.feature = feature;
          best.impurity = impurity;
          best.threshold = 0.5 * (column[i].first + column[i + 1].first);
          if (best.threshold == column[i + 1].first)
            best.threshold = column[i].first;
        }
      }
      if (drawn >= max_features_ && best.feature >= 0)
        break;
    }
    return best;
  }

  const DenseMatrix& x_;
  std::span<const int> y_;
  const RandomForestParams& params_;
  std::mt19937_64 rng_;
  size_t max_features_ = 1;
  std::vector<size_t> features_;
  std::vector<DecisionTree::Node> nodes_;
};

}  // namespace

double GiniImpurity(double class0, double class1) {
  double total = class0 + class1;
  if (total <= 0.0)
    return 0.0;
  double p0 = class0 / total, p1 = class1 / total;
  return 1.0 - p0 * p0 - p1 * p1;
}

nlohmann::json RandomForestParams::ToJson() const {
  return {{"n_trees", n_trees},
          {"max_features", max_features},
          {"max_depth", max_depth},
          {"min_samples_leaf", min_samples_leaf},
          {"bootstrap", bootstrap},
          {"criterion", "gini"}};
}

RandomForestParams RandomForestParams::FromJson(const nlohmann::json& json) {
  RandomForestParams p;
  p.n_trees = json.value("n_trees", p.n_trees);
  p.max_features = json.value("max_features", p.max_features);
  p.max_depth = json.value("max_depth", p.max_depth);
  p.min_samples_leaf = json.value("min_samples_leaf", p.min_samples_leaf);
  p.bootstrap = json.value("bootstrap", p.bootstrap);
  p.threads = json.value("threads", p.threads);
  return p;
}

DecisionTree DecisionTree::Grow(const DenseMatrix& x, std::span<const int> y,
                                std::vector<size_t> samples, const RandomForestParams& params,
                                uint64_t seed) {
  TreeBuilder builder(x, y, params, seed);
  return DecisionTree(builder.Build(std::move(samples)));
}

double DecisionTree::PredictProba(const double* row) const {
  int index = 0;
  while (!nodes_[index].is_leaf()) {
    const Node& node = nodes_[index];
    index = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  const Node& leaf = nodes_[index];
  return double(leaf.counts[1]) / double(leaf.counts[0] + leaf.counts[1]);
}

RandomForest RandomForest::Train(const DenseMatrix& x, std::span<const int> y,
                                 const RandomForestParams& params, uint64_t seed) {
  if (x.rows != y.size() || x.rows == 0)
    throw UsageError("random forest: rows and labels must match and be non-empty");
  if (params.n_trees < 1 || params.min_samples_leaf < 1)
    throw UsageError("random forest: n_trees and min_samples_leaf must be positive");
  RequireFinite(x);

  std::vector<DecisionTree> trees(params.n_trees);
  auto grow = [&](int t) {
    uint64_t tree_seed = seed + static_cast<uint64_t>(t);
    std::vector<size_t> samples(x.rows);
    if (params.bootstrap) {
      std::mt19937_64 rng(tree_seed ^ 0x9e3779b97f4a7c15ULL);
      std::uniform_int_distribution<size_t> pick(0, x.rows - 1);
      for (size_t& s : samples)
        s = pick(rng);
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    trees[t] = DecisionTree::Grow(x, y, std::move(samples), params, tree_seed);
  };

  unsigned threads = params.threads > 0 ? unsigned(params.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, unsigned(params.n_trees));
  if (threads <= 1) {
    for (int t = 0; t < params.n_trees; ++t)
      grow(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (int t = next++; t < params.n_trees; t = next++)
          grow(t);
      });
    }
    for (auto& worker : workers)
      worker.join();
  }
  return RandomForest(std::move(trees), x.cols);
}

std::vector<double> RandomForest::PredictProba(const DenseMatrix& x) const {
  if (x.cols != n_features_)
    throw UsageError("random forest: expected " + std::to_string(n_features_) +
                     " features, got " + std::to_string(x.cols));
  std::vector<double> out(x.rows, 0.0);
  for (size_t r = 0; r < x.rows; ++r) {
    double sum = 0.0;
    for (const DecisionTree& tree : trees_)
      sum += tree.PredictProba(x.row(r));
    out[r] = sum / static_cast<double>(trees_.size());
  }
  return out;
}

nlohmann::json RandomForest::ToJson() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const DecisionTree& tree : trees_) {
    // Columnar layout keeps large forests compact.
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   counts = nlohmann::json::array();
    for (const auto& node : tree.nodes()) {
      feature.push_back(node.feature);
      threshold.push_back(node.threshold);
      left.push_back(node.left);
      right.push_back(node.right);
      counts.push_back({node.counts[0], node.counts[1]});
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"counts", counts}});
  }
  return {{"n_features", n_features_}, {"trees", trees}};
}

RandomForest RandomForest::FromJson(const nlohmann::json& json) {
  std::vector<DecisionTree> trees;
  size_t n_features = json.at("n_features").get<size_t>();
  for (const auto& t : json.at("trees")) {
    const auto& feature = t.at("feature");
    std::vector<DecisionTree::Node> nodes(feature.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
      auto& node = nodes[i];
      node.feature = feature[i].get<int>();
      node.threshold = t.at("threshold")[i].get<double>();
      node.left = t.at("left")[i].get<int>();
      node.right = t.at("right")[i].get<int>();
      node.counts = {t.at("counts")[i][0].get<int64_t>(), t.at("counts")[i][1].get<int64_t>()};
      bool bad_child = !node.is_leaf() &&
                       (node.left <= int(i) || node.right <= int(i) ||
                        node.left >= int(nodes.size()) || node.right >= int(nodes.size()) ||
                        node.feature >= int(n_features));
      if (bad_child)
        throw InvariantError("random forest document has an invalid node");
    }
    if (nodes.empty())
      throw InvariantError("random forest document has an empty tree");
    trees.emplace_back(std::move(nodes));
  }
  return RandomForest(std::move(trees), n_features);
}

}  // namespace sitelens
