#include "sitelens/naive_bayes.h"

#include <cmath>
#include <numbers>

#include "sitelens/error.h"
#include "sitelens/logistic_regression.h"

namespace sitelens {

GaussianNaiveBayes GaussianNaiveBayes::Train(const DenseMatrix& x, std::span<const int> y) {
  if (x.rows != y.size())
    throw UsageError("naive bayes: rows and labels differ in count");
  RequireFinite(x);
  std::array<ClassStats, 2> classes;
  std::array<double, 2> counts{};
  for (auto& c : classes) {
    c.mean.assign(x.cols, 0.0);
    c.variance.assign(x.cols, 0.0);
  }
  for (size_t r = 0; r < x.rows; ++r) {
    ClassStats& c = classes[y[r]];
    counts[y[r]] += 1.0;
    for (size_t f = 0; f < x.cols; ++f)
      c.mean[f] += x.at(r, f);
  }
  if (counts[0] == 0.0 || counts[1] == 0.0)
    throw UsageError("naive bayes needs both classes in the training set");
  for (int k = 0; k < 2; ++k) {
    for (double& m : classes[k].mean)
      m /= counts[k];
  }
  for (size_t r = 0; r < x.rows; ++r) {
    ClassStats& c = classes[y[r]];
    for (size_t f = 0; f < x.cols; ++f) {
      double d = x.at(r, f) - c.mean[f];
      c.variance[f] += d * d;
    }
  }
  for (int k = 0; k < 2; ++k) {
    classes[k].prior = counts[k] / static_cast<double>(x.rows);
    for (double& v : classes[k].variance)
      v = std::max(v / counts[k], kVarianceFloor);
  }
  return GaussianNaiveBayes(std::move(classes));
}

std::vector<double> GaussianNaiveBayes::PredictProba(const DenseMatrix& x) const {
  if (x.cols != classes_[0].mean.size())
    throw UsageError("naive bayes: expected " + std::to_string(classes_[0].mean.size()) +
                     " features, got " + std::to_string(x.cols));
  std::vector<double> out(x.rows);
  for (size_t r = 0; r < x.rows; ++r) {
    std::array<double, 2> log_joint{};
    for (int k = 0; k < 2; ++k) {
      const ClassStats& c = classes_[k];
      double lp = std::log(c.prior);
      for (size_t f = 0; f < x.cols; ++f) {
        double d = x.at(r, f) - c.mean[f];
        lp -= 0.5 * (std::log(2.0 * std::numbers::pi * c.variance[f]) + d * d / c.variance[f]);
      }
      log_joint[k] = lp;
    }
    // p1 = 1 / (1 + exp(l0 - l1)), evaluated without overflow.
    double diff = log_joint[0] - log_joint[1];
    out[r] = diff >= 0.0 ? std::exp(-diff) / (1.0 + std::exp(-diff))
                         : 1.0 / (1.0 + std::exp(diff));
  }
  return out;
}

nlohmann::json GaussianNaiveBayes::ToJson() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const ClassStats& c : classes_)
    classes.push_back({{"prior", c.prior}, {"mean", c.mean}, {"variance", c.variance}});
  return {{"classes", classes}};
}

GaussianNaiveBayes GaussianNaiveBayes::FromJson(const nlohmann::json& json) {
  std::array<ClassStats, 2> classes;
  for (int k = 0; k < 2; ++k) {
    const auto& c = json.at("classes").at(k);
    classes[k].prior = c.at("prior").get<double>();
    classes[k].mean = c.at("mean").get<std::vector<double>>();
    classes[k].variance = c.at("variance").get<std::vector<double>>();
  }
  return GaussianNaiveBayes(std::move(classes));
}

}  // namespace sitelens
