#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sitelens/features.h"
#include "sitelens/logistic_regression.h"
#include "sitelens/preprocess.h"

namespace sitelens {

// Validation accuracy within this distance of the best counts as a tie, and
// ties go to the smaller feature set.
inline constexpr double kSweepTolerance = 0.005;

// Recursive feature elimination driven by logistic-regression coefficients.
// Returns column indices, the last survivor first. Each round drops the
// |step| columns with the smallest |weight|; equal weights drop the lower
// index first. Throws UsageError on single-class labels or step == 0.
std::vector<size_t> RecursiveFeatureElimination(const DenseMatrix& x, std::span<const int> y,
                                                size_t step = 1,
                                                const LogisticRegressionParams& params = {});

struct SweepPoint {
  size_t k = 0;
  double accuracy = 0.0;
};

struct SelectionResult {
  std::vector<std::string> ranking;  // by name, last survivor first
  size_t chosen_k = 0;
  std::vector<std::string> selected;  // ranking[0 .. chosen_k)
  std::vector<SweepPoint> sweep;
  uint64_t split_seed = 0;
  std::string matrix_hash;

  nlohmann::json ToJson() const;
  static SelectionResult FromJson(const nlohmann::json& json);
  static SelectionResult Load(const std::filesystem::path& path);
};

// {5, 10, ..., 185, 187} for 187 columns: multiples of five plus the total.
std::vector<size_t> DefaultGrid(size_t total);
// "start:stop:step", with stop appended when the stride skips it, or a
// comma-separated list. Throws UsageError on malformed input.
std::vector<size_t> ParseGrid(std::string_view text, size_t total);

// Trains logistic regression on the top-k ranked columns for every k in the
// grid, scores validation accuracy and picks the smallest k within
// kSweepTolerance of the best. |names| labels the columns of the matrices.
SelectionResult SweepK(const DenseMatrix& train, std::span<const int> y_train,
                       const DenseMatrix& validation, std::span<const int> y_validation,
                       std::span<const size_t> ranking, std::span<const size_t> grid,
                       std::span<const std::string> names,
                       const LogisticRegressionParams& params = {});

// Split, preprocess over the whole catalog, rank on the training rows and
// sweep on the validation rows.
SelectionResult SelectFeatures(const FeatureMatrix& matrix, uint64_t split_seed,
                               std::span<const size_t> grid);

}  // namespace sitelens
