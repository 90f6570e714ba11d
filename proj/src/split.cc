#include "sitelens/split.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "sitelens/error.h"

namespace sitelens {
namespace {

constexpr double kTrainShare = 0.6;
constexpr double kValidationShare = 0.2;
constexpr size_t kMinRowsPerClass = 5;

// Apportions round(share * total) slots over the classes by largest
// remainder, never exceeding |available| per class.
std::array<size_t, 2> Apportion(const std::array<size_t, 2>& sizes,
                                const std::array<size_t, 2>& available,
                                double share) {
  size_t total = sizes[0] + sizes[1];
  size_t target = static_cast<size_t>(std::llround(share * static_cast<double>(total)));
  std::array<size_t, 2> out{};
  std::array<double, 2> remainder{};
  size_t assigned = 0;
  for (int c = 0; c < 2; ++c) {
    double exact = share * static_cast<double>(sizes[c]);
    out[c] = std::min(static_cast<size_t>(std::floor(exact)), available[c]);
    remainder[c] = exact - std::floor(exact);
    assigned += out[c];
  }
  int first = remainder[1] > remainder[0] ? 1 : 0;
  for (int c : {first, 1 - first}) {
    if (assigned < target && out[c] < available[c]) {
      ++out[c];
      ++assigned;
    }
  }
  return out;
}

}  // namespace

TrainTestSplit SplitDataset(std::span<const int> labels, uint64_t seed) {
  std::array<std::vector<size_t>, 2> by_class;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw UsageError("split labels must be 0 or 1");
    by_class[labels[i]].push_back(i);
  }
  for (const auto& rows : by_class) {
    if (rows.size() < kMinRowsPerClass)
      throw UsageError("split needs at least 5 rows per class");
  }

  std::mt19937_64 rng(seed);
  for (auto& rows : by_class)
    std::shuffle(rows.begin(), rows.end(), rng);

  std::array<size_t, 2> sizes = {by_class[0].size(), by_class[1].size()};
  std::array<size_t, 2> train = Apportion(sizes, sizes, kTrainShare);
  std::array<size_t, 2> left = {sizes[0] - train[0], sizes[1] - train[1]};
  std::array<size_t, 2> validation = Apportion(sizes, left, kValidationShare);

  TrainTestSplit split;
  split.seed = seed;
  for (int c = 0; c < 2; ++c) {
    const auto& rows = by_class[c];
    auto begin = rows.begin();
    split.train.insert(split.train.end(), begin, begin + train[c]);
    split.validation.insert(split.validation.end(), begin + train[c],
                            begin + train[c] + validation[c]);
    split.test.insert(split.test.end(), begin + train[c] + validation[c], rows.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace sitelens
