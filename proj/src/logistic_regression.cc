#include "sitelens/logistic_regression.h"

#include <cmath>

#include "sitelens/error.h"

namespace sitelens {
namespace {

double Sigmoid(double z) {
  if (z >= 0.0)
    return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

nlohmann::json LogisticRegressionParams::ToJson() const {
  return {{"learning_rate", learning_rate}, {"iterations", iterations}, {"l2", l2}};
}

LogisticRegressionParams LogisticRegressionParams::FromJson(const nlohmann::json& json) {
  LogisticRegressionParams p;
  p.learning_rate = json.value("learning_rate", p.learning_rate);
  p.iterations = json.value("iterations", p.iterations);
  p.l2 = json.value("l2", p.l2);
  return p;
}

void RequireFinite(const DenseMatrix& x) {
  for (double v : x.data) {
    if (!std::isfinite(v))
      throw UsageError("training input contains a non-finite value");
  }
}

double Accuracy(std::span<const double> probabilities, std::span<const int> labels) {
  if (labels.empty())
    return 0.0;
  size_t correct = 0;
  for (size_t i = 0; i < labels.size(); ++i)
    correct += ((probabilities[i] >= 0.5 ? 1 : 0) == labels[i]) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

LogisticRegression LogisticRegression::Train(const DenseMatrix& x, std::span<const int> y,
                                             const LogisticRegressionParams& params) {
  if (x.rows != y.size())
    throw UsageError("logistic regression: rows and labels differ in count");
  if (x.rows == 0)
    throw UsageError("logistic regression: empty training set");
  RequireFinite(x);

  const size_t n = x.rows, d = x.cols;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> w(d, 0.0), grad(d);
  double b = 0.0;
  for (int iter = 0; iter < params.iterations; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (size_t r = 0; r < n; ++r) {
      const double* row = x.row(r);
      double z = b;
      for (size_t c = 0; c < d; ++c)
        z += w[c] * row[c];
      double residual = Sigmoid(z) - static_cast<double>(y[r]);
      grad_b += residual;
      for (size_t c = 0; c < d; ++c)
        grad[c] += residual * row[c];
    }
    for (size_t c = 0; c < d; ++c)
      w[c] -= params.learning_rate * (grad[c] * inv_n + params.l2 * w[c]);
    b -= params.learning_rate * grad_b * inv_n;
  }
  return LogisticRegression(std::move(w), b);
}

std::vector<double> LogisticRegression::PredictProba(const DenseMatrix& x) const {
  if (x.cols != weights_.size())
    throw UsageError("logistic regression: expected " + std::to_string(weights_.size()) +
                     " features, got " + std::to_string(x.cols));
  std::vector<double> out(x.rows);
  for (size_t r = 0; r < x.rows; ++r) {
    const double* row = x.row(r);
    double z = bias_;
    for (size_t c = 0; c < x.cols; ++c)
      z += weights_[c] * row[c];
    out[r] = Sigmoid(z);
  }
  return out;
}

nlohmann::json LogisticRegression::ToJson() const {
  return {{"weights", weights_}, {"bias", bias_}};
}

LogisticRegression LogisticRegression::FromJson(const nlohmann::json& json) {
  return LogisticRegression(json.at("weights").get<std::vector<double>>(),
                            json.at("bias").get<double>());
}

}  // namespace sitelens
