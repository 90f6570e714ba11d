#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sitelens {

struct TrainTestSplit {
  std::vector<size_t> train;
  std::vector<size_t> validation;
  std::vector<size_t> test;
  uint64_t seed = 0;

  bool operator==(const TrainTestSplit&) const = default;
};

// Stratified 60/20/20 split over binary labels (0 = real, 1 = fake). Each
// part's size is within one row of its share overall, and per-class counts
// are apportioned by largest remainder. Index lists are sorted. Throws
// UsageError when a class has fewer than five rows.
TrainTestSplit SplitDataset(std::span<const int> labels, uint64_t seed);

}  // namespace sitelens
