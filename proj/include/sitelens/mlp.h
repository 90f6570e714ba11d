#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"
#include "sitelens/preprocess.h"

namespace sitelens {

struct MlpParams {
  int hidden_units = 20;
  double dropout_rate = 0.1;
  int epochs = 50;
  int rounds = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-7;
  double batch_norm_momentum = 0.99;
  double batch_norm_epsilon = 1e-3;

  nlohmann::json ToJson() const;
  static MlpParams FromJson(const nlohmann::json& json);
};

// input(d) -> batch normalization -> dense(X, relu) -> dropout -> dense(2)
// -> softmax. Weight matrices are row-major: w1 is d x X, w2 is X x 2.
class Mlp {
 public:
  struct Parameters {
    std::vector<double> gamma, beta;  // batch-norm scale and shift, size d
    std::vector<double> w1, b1;       // d x X, X
    std::vector<double> w2, b2;       // X x 2, 2

    size_t Count() const {
      return gamma.size() + beta.size() + w1.size() + b1.size() + w2.size() + b2.size();
    }
    // Every trainable value in a fixed order.
    std::vector<double*> Flat();
  };

  // Per-round accuracy and loss measured after the final epoch.
  struct TrainingReport {
    std::vector<double> round_accuracy;
    std::vector<double> round_loss;
    int best_round = 0;
    double mean_accuracy = 0.0;
    double mean_loss = 0.0;

    nlohmann::json ToJson() const;
  };

  Mlp() = default;
  // Glorot-uniform dense weights, zero biases, unit batch-norm scale.
  Mlp(size_t inputs, const MlpParams& params, uint64_t seed);

  // Runs params.rounds independent restarts (seed + round) of params.epochs
  // epochs each and keeps the restart with the best accuracy on the
  // validation rows, or on the training rows when none are given.
  static Mlp Train(const DenseMatrix& x, std::span<const int> y, const MlpParams& params,
                   uint64_t seed, const DenseMatrix* validation_x = nullptr,
                   std::span<const int> validation_y = {},
                   TrainingReport* report = nullptr);

  // Inference mode: running batch-norm statistics, no dropout.
  std::vector<double> PredictProba(const DenseMatrix& x) const;

  // Mean cross-entropy of one training-mode forward pass (batch statistics,
  // no dropout). Fills |gradient| in Parameters::Flat() order when given.
  double LossAndGradient(const DenseMatrix& x, std::span<const int> y,
                         std::vector<double>* gradient) const;

  // Largest relative difference between analytic and central-difference
  // gradients over every trainable parameter. Relative error is
  // |a - n| / max(|a| + |n|, 1e-6).
  double FiniteDifferenceCheck(const DenseMatrix& x, std::span<const int> y,
                               double epsilon = 1e-5) const;

  size_t inputs() const { return inputs_; }
  size_t hidden_units() const { return hidden_; }
  size_t TrainableParameterCount() const { return params_.Count(); }
  Parameters& parameters() { return params_; }
  const Parameters& parameters() const { return params_; }

  nlohmann::json ToJson() const;
  static Mlp FromJson(const nlohmann::json& json);

 private:
  struct Adam;

  // One minibatch update; dropout masks come from |rng|.
  void Step(const DenseMatrix& x, std::span<const int> y, std::mt19937_64& rng, Adam& adam);
  double ForwardBackward(const DenseMatrix& x, std::span<const int> y,
                         const std::vector<double>* dropout_mask, Parameters* gradient,
                         std::vector<double>* batch_mean, std::vector<double>* batch_var) const;

  size_t inputs_ = 0;
  size_t hidden_ = 0;
  MlpParams config_;
  Parameters params_;
  std::vector<double> running_mean_, running_var_;
};

}  // namespace sitelens
