#pragma once

#include <span>
#include <vector>

#include "json.hpp"
#include "sitelens/preprocess.h"

namespace sitelens {

struct LogisticRegressionParams {
  double learning_rate = 0.1;
  int iterations = 500;
  double l2 = 1e-4;

  nlohmann::json ToJson() const;
  static LogisticRegressionParams FromJson(const nlohmann::json& json);
};

// Binary logistic regression fit by full-batch gradient descent on the mean
// log-loss plus (l2 / 2) * |w|^2. Weights start at zero, so training is
// deterministic without a seed.
class LogisticRegression {
 public:
  LogisticRegression() = default;
  LogisticRegression(std::vector<double> weights, double bias)
      : weights_(std::move(weights)), bias_(bias) {}

  // Throws UsageError on non-finite inputs or a label/row count mismatch.
  static LogisticRegression Train(const DenseMatrix& x, std::span<const int> y,
                                  const LogisticRegressionParams& params = {});

  // Probability of class 1 per row. Throws UsageError on a width mismatch.
  std::vector<double> PredictProba(const DenseMatrix& x) const;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

  nlohmann::json ToJson() const;
  static LogisticRegression FromJson(const nlohmann::json& json);

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
};

// Fraction of rows where (p >= 0.5) matches the label.
double Accuracy(std::span<const double> probabilities, std::span<const int> labels);

// Throws UsageError when the matrix holds a NaN or infinity.
void RequireFinite(const DenseMatrix& x);

}  // namespace sitelens
