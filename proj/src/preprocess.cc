#include "sitelens/preprocess.h"

#include <algorithm>
#include <cmath>

#include "sitelens/error.h"
#include "sitelens/hash.h"

namespace sitelens {

std::string SummarizeStatus(int code) {
  if (code < 100 || code > 599)
    throw UsageError("http status out of range: " + std::to_string(code));
  return std::to_string(code / 100) + "**";
}

DenseMatrix DenseMatrix::SelectRows(const std::vector<size_t>& indices) const {
  DenseMatrix out(indices.size(), cols);
  for (size_t i = 0; i < indices.size(); ++i)
    std::copy_n(row(indices[i]), cols, out.row(i));
  return out;
}

DenseMatrix DenseMatrix::SelectColumns(const std::vector<size_t>& indices) const {
  DenseMatrix out(rows, indices.size());
  for (size_t r = 0; r < rows; ++r) {
    const double* src = row(r);
    double* dst = out.row(r);
    for (size_t c = 0; c < indices.size(); ++c)
      dst[c] = src[indices[c]];
  }
  return out;
}

double Median(std::vector<double> values) {
  if (values.empty())
    return 0.0;
  size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double upper = values[mid];
  if (values.size() % 2 == 1)
    return upper;
  double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

FittedPreprocessor::FittedPreprocessor(std::vector<std::string> names,
                                       std::vector<ColumnParameters> columns)
    : names_(std::move(names)), columns_(std::move(columns)) {
  if (names_.size() != columns_.size())
    throw InvariantError("preprocessor names and parameters differ in length");
}

FittedPreprocessor FittedPreprocessor::Fit(const FeatureMatrix& train) {
  if (train.rows.empty())
    throw UsageError("cannot fit a preprocessor on an empty matrix");
  const size_t cols = train.catalog.size();
  std::vector<ColumnParameters> columns(cols);
  std::vector<double> present;
  for (size_t c = 0; c < cols; ++c) {
    present.clear();
    for (const FeatureVector& row : train.rows) {
      if (row.values.at(c))
        present.push_back(*row.values[c]);
    }
    ColumnParameters& p = columns[c];
    p.impute = present.empty() ? 0.0 : Median(present);

    double sum = 0.0;
    for (const FeatureVector& row : train.rows)
      sum += row.values[c].value_or(p.impute);
    p.mean = sum / static_cast<double>(train.rows.size());
    double squares = 0.0;
    for (const FeatureVector& row : train.rows) {
      double d = row.values[c].value_or(p.impute) - p.mean;
      squares += d * d;
    }
    p.sd = std::max(std::sqrt(squares / static_cast<double>(train.rows.size())),
                    kMinStandardDeviation);
  }
  return FittedPreprocessor(train.catalog.Names(), std::move(columns));
}

std::vector<double> FittedPreprocessor::TransformRow(const FeatureVector& row) const {
  if (row.values.size() != columns_.size())
    throw InvariantError("feature vector length does not match preprocessor");
  std::vector<double> out(columns_.size());
  for (size_t c = 0; c < columns_.size(); ++c) {
    const ColumnParameters& p = columns_[c];
    out[c] = (row.values[c].value_or(p.impute) - p.mean) / p.sd;
  }
  return out;
}

DenseMatrix FittedPreprocessor::Transform(const FeatureMatrix& matrix) const {
  if (matrix.catalog.Names() != names_)
    throw InvariantError("matrix catalog does not match the fitted preprocessor");
  DenseMatrix out(matrix.rows.size(), columns_.size());
  for (size_t r = 0; r < matrix.rows.size(); ++r) {
    std::vector<double> values = TransformRow(matrix.rows[r]);
    std::copy(values.begin(), values.end(), out.row(r));
  }
  return out;
}

nlohmann::json FittedPreprocessor::ToJson() const {
  nlohmann::json features = nlohmann::json::object();
  for (size_t c = 0; c < names_.size(); ++c) {
    features[names_[c]] = {{"impute", columns_[c].impute},
                           {"mean", columns_[c].mean},
                           {"sd", columns_[c].sd}};
  }
  return {{"features", features}, {"order", names_}};
}

FittedPreprocessor FittedPreprocessor::FromJson(const nlohmann::json& json) {
  try {
    std::vector<std::string> names = json.at("order").get<std::vector<std::string>>();
    std::vector<ColumnParameters> columns;
    const auto& features = json.at("features");
    for (const std::string& name : names) {
      const auto& f = features.at(name);
      ColumnParameters p{f.at("impute").get<double>(), f.at("mean").get<double>(),
                         f.at("sd").get<double>()};
      if (!(p.sd >= kMinStandardDeviation))
        throw InvariantError("preprocessor sd below floor for " + name);
      columns.push_back(p);
    }
    return FittedPreprocessor(std::move(names), std::move(columns));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed preprocessor document: ") + e.what());
  }
}

std::string FittedPreprocessor::Hash() const {
  return Sha256Hex(ToJson().dump());
}

}  // namespace sitelens
