#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sitelens/features.h"
#include "sitelens/logistic_regression.h"
#include "sitelens/metrics.h"
#include "sitelens/mlp.h"
#include "sitelens/naive_bayes.h"
#include "sitelens/preprocess.h"
#include "sitelens/random_forest.h"
#include "sitelens/split.h"

namespace sitelens {

enum class ModelKind { kRandomForest, kLogisticRegression, kNaiveBayes, kMlp };

// "rf", "lr", "gnb", "mlp".
std::string_view ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);

// Async mode may use every selected feature. Realtime mode drops the ones
// that need offline DNS or IP history lookups.
enum class FeatureMode { kAsync, kRealtime };

std::string_view FeatureModeName(FeatureMode mode);
FeatureMode ParseFeatureMode(std::string_view name);

// 0 = real, 1 = fake. Throws DataError when a row is unlabeled.
std::vector<int> BinaryLabels(const FeatureMatrix& matrix);

// A split of a labeled matrix with the preprocessor fitted on the training
// rows over the whole catalog, and every part reduced to |columns|.
struct PreparedSplit {
  TrainTestSplit split;
  FittedPreprocessor preprocessor;
  std::vector<size_t> columns;
  DenseMatrix train, validation, test;
  std::vector<int> y_train, y_validation, y_test;
};

PreparedSplit PrepareSplit(const FeatureMatrix& matrix, std::span<const std::string> features,
                           uint64_t split_seed);

struct TrainOptions {
  ModelKind kind = ModelKind::kRandomForest;
  FeatureMode mode = FeatureMode::kAsync;
  // Empty means the default top features.
  std::vector<std::string> features;
  uint64_t seed = 1;
  uint64_t split_seed = 7;
  RandomForestParams rf;
  LogisticRegressionParams lr;
  MlpParams mlp;

  nlohmann::json HyperparametersJson() const;
};

// A classifier bundled with everything needed to score raw feature vectors
// and to audit where it came from.
class TrainedModel {
 public:
  static constexpr int kFormatVersion = 1;

  static TrainedModel Train(const FeatureMatrix& matrix, const TrainOptions& options);

  // Scores rows of a full-catalog matrix. Throws InvariantError when the
  // matrix catalog differs from the training catalog.
  std::vector<double> PredictProba(const FeatureMatrix& matrix) const;
  // Scores an already preprocessed matrix restricted to features().
  std::vector<double> PredictDense(const DenseMatrix& x) const;

  // Re-derives the split from split_seed and scores the test rows. Throws
  // InvariantError unless |matrix| reproduces the embedded preprocessor.
  Metrics EvaluateTest(const FeatureMatrix& matrix) const;

  ModelKind kind() const { return options_.kind; }
  const TrainOptions& options() const { return options_; }
  const std::vector<std::string>& features() const { return features_; }
  const FittedPreprocessor& preprocessor() const { return preprocessor_; }
  const std::string& matrix_hash() const { return matrix_hash_; }
  const std::string& catalog_hash() const { return catalog_hash_; }
  const Metrics& validation_metrics() const { return validation_; }
  // Present for MLP models only.
  const std::optional<Mlp::TrainingReport>& mlp_report() const { return mlp_report_; }

  nlohmann::json ToJson() const;
  static TrainedModel FromJson(const nlohmann::json& json);
  void Save(const std::filesystem::path& path) const;
  static TrainedModel Load(const std::filesystem::path& path);

 private:
  using Classifier = std::variant<RandomForest, LogisticRegression, GaussianNaiveBayes, Mlp>;

  TrainOptions options_;
  std::vector<std::string> features_;
  std::vector<size_t> columns_;
  FittedPreprocessor preprocessor_;
  std::string matrix_hash_;
  std::string catalog_hash_;
  Metrics validation_;
  std::optional<Mlp::TrainingReport> mlp_report_;
  Classifier classifier_;
};

}  // namespace sitelens
