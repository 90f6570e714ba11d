#pragma once

#include <array>
#include <span>
#include <vector>

#include "json.hpp"
#include "sitelens/preprocess.h"

namespace sitelens {

inline constexpr double kVarianceFloor = 1e-9;

// Gaussian naive Bayes over two classes with maximum-likelihood per-class
// means and variances.
class GaussianNaiveBayes {
 public:
  struct ClassStats {
    double prior = 0.0;
    std::vector<double> mean;
    std::vector<double> variance;
  };

  GaussianNaiveBayes() = default;
  explicit GaussianNaiveBayes(std::array<ClassStats, 2> classes)
      : classes_(std::move(classes)) {}

  // Throws UsageError unless both classes are present.
  static GaussianNaiveBayes Train(const DenseMatrix& x, std::span<const int> y);

  // Posterior probability of class 1 per row.
  std::vector<double> PredictProba(const DenseMatrix& x) const;

  const ClassStats& stats(int label) const { return classes_[label]; }

  nlohmann::json ToJson() const;
  static GaussianNaiveBayes FromJson(const nlohmann::json& json);

 private:
  std::array<ClassStats, 2> classes_;
};

}  // namespace sitelens
