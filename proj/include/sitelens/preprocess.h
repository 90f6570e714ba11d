#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "sitelens/features.h"

namespace sitelens {

// Collapses an HTTP status into its class, e.g. 201 -> "2**". Throws
// UsageError outside 100..599.
std::string SummarizeStatus(int code);

inline constexpr double kMinStandardDeviation = 1e-12;

// Dense, fully-imputed, standardized feature matrix in row-major order.
struct DenseMatrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }
  const double* row(size_t r) const { return data.data() + r * cols; }
  double* row(size_t r) { return data.data() + r * cols; }

  DenseMatrix SelectRows(const std::vector<size_t>& indices) const;
  DenseMatrix SelectColumns(const std::vector<size_t>& indices) const;
};

struct ColumnParameters {
  double impute = 0.0;
  double mean = 0.0;
  double sd = 1.0;

  bool operator==(const ColumnParameters&) const = default;
};

// Median imputation followed by z-scoring, with all statistics taken from
// the training rows only.
class FittedPreprocessor {
 public:
  FittedPreprocessor() = default;
  FittedPreprocessor(std::vector<std::string> names,
                     std::vector<ColumnParameters> columns);

  // Throws UsageError on an empty matrix.
  static FittedPreprocessor Fit(const FeatureMatrix& train);

  // Imputes then standardizes. Throws InvariantError when the matrix
  // catalog does not match the fitted feature names.
  DenseMatrix Transform(const FeatureMatrix& matrix) const;
  std::vector<double> TransformRow(const FeatureVector& row) const;

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<ColumnParameters>& columns() const { return columns_; }

  // {"features": {name: {"impute","mean","sd"}}, "order": [names...]}
  nlohmann::json ToJson() const;
  static FittedPreprocessor FromJson(const nlohmann::json& json);
  std::string Hash() const;

  bool operator==(const FittedPreprocessor&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<ColumnParameters> columns_;
};

// Median of the values; the mean of the two middle elements for even sizes.
double Median(std::vector<double> values);

}  // namespace sitelens
