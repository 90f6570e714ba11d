#include "sitelens/select.h"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>

#include "sitelens/error.h"
#include "sitelens/model.h"

namespace sitelens {

std::vector<size_t> RecursiveFeatureElimination(const DenseMatrix& x, std::span<const int> y,
                                                size_t step,
                                                const LogisticRegressionParams& params) {
  if (step == 0)
    throw UsageError("elimination step must be positive");
  if (x.rows != y.size())
    throw UsageError("rows and labels differ in count");
  bool has0 = std::count(y.begin(), y.end(), 0) > 0;
  bool has1 = std::count(y.begin(), y.end(), 1) > 0;
  if (!has0 || !has1)
    throw UsageError("feature elimination needs both classes");

  std::vector<size_t> surviving(x.cols);
  std::iota(surviving.begin(), surviving.end(), 0);
  std::vector<size_t> eliminated;
  eliminated.reserve(x.cols);
  while (!surviving.empty()) {
    LogisticRegression fit = LogisticRegression::Train(x.SelectColumns(surviving), y, params);
    std::vector<size_t> order(surviving.size());
    std::iota(order.begin(), order.end(), 0);
    const std::vector<double>& w = fit.weights();
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      double wa = std::abs(w[a]), wb = std::abs(w[b]);
      if (wa != wb)
        return wa < wb;
      return surviving[a] < surviving[b];
    });
    size_t drop = std::min(step, surviving.size());
    std::vector<bool> removed(surviving.size(), false);
    for (size_t i = 0; i < drop; ++i) {
      eliminated.push_back(surviving[order[i]]);
      removed[order[i]] = true;
    }
    std::vector<size_t> next;
    for (size_t i = 0; i < surviving.size(); ++i) {
      if (!removed[i])
        next.push_back(surviving[i]);
    }
    surviving = std::move(next);
  }
  std::reverse(eliminated.begin(), eliminated.end());
  return eliminated;
}

std::vector<size_t> DefaultGrid(size_t total) {
  std::vector<size_t> grid;
  for (size_t k = 5; k < total; k += 5)
    grid.push_back(k);
  grid.push_back(total);
  return grid;
}

namespace {

size_t ParseCount(std::string_view text) {
  size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw UsageError("not a count: '" + std::string(text) + "'");
  return value;
}

}  // namespace

std::vector<size_t> ParseGrid(std::string_view text, size_t total) {
  std::vector<size_t> grid;
  if (text.find(':') != std::string_view::npos) {
    size_t a = text.find(':');
    size_t b = text.find(':', a + 1);
    if (b == std::string_view::npos)
      throw UsageError("grid range must be start:stop:step");
    size_t start = ParseCount(text.substr(0, a));
    size_t stop = ParseCount(text.substr(a + 1, b - a - 1));
    size_t stride = ParseCount(text.substr(b + 1));
    if (stride == 0 || start == 0 || start > stop)
      throw UsageError("grid range must have 0 < start <= stop and a positive step");
    for (size_t k = start; k <= stop; k += stride)
      grid.push_back(k);
    if (grid.back() != stop)
      grid.push_back(stop);
  } else {
    size_t pos = 0;
    while (pos <= text.size()) {
      size_t comma = text.find(',', pos);
      if (comma == std::string_view::npos)
        comma = text.size();
      grid.push_back(ParseCount(text.substr(pos, comma - pos)));
      pos = comma + 1;
    }
  }
  for (size_t k : grid) {
    if (k < 1 || k > total)
      throw UsageError("grid value " + std::to_string(k) + " outside 1.." +
                       std::to_string(total));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

SelectionResult SweepK(const DenseMatrix& train, std::span<const int> y_train,
                       const DenseMatrix& validation, std::span<const int> y_validation,
                       std::span<const size_t> ranking, std::span<const size_t> grid,
                       std::span<const std::string> names,
                       const LogisticRegressionParams& params) {
  if (grid.empty())
    throw UsageError("K grid is empty");
  if (ranking.size() != train.cols || names.size() != train.cols)
    throw UsageError("ranking and names must cover every column");
  std::set<size_t> seen(ranking.begin(), ranking.end());
  if (seen.size() != ranking.size() || *seen.rbegin() >= train.cols)
    throw InvariantError("ranking is not a permutation of the columns");

  SelectionResult result;
  for (size_t k : grid) {
    if (k < 1 || k > train.cols)
      throw UsageError("grid value " + std::to_string(k) + " outside 1.." +
                       std::to_string(train.cols));
    std::vector<size_t> top(ranking.begin(), ranking.begin() + static_cast<ptrdiff_t>(k));
    LogisticRegression fit = LogisticRegression::Train(train.SelectColumns(top), y_train, params);
    double acc = Accuracy(fit.PredictProba(validation.SelectColumns(top)), y_validation);
    result.sweep.push_back({k, acc});
  }
  double best = 0.0;
  for (const SweepPoint& p : result.sweep)
    best = std::max(best, p.accuracy);
  result.chosen_k = train.cols;
  for (const SweepPoint& p : result.sweep) {
    if (p.accuracy >= best - kSweepTolerance) {
      result.chosen_k = std::min(result.chosen_k, p.k);
    }
  }
  for (size_t idx : ranking)
    result.ranking.push_back(names[idx]);
  result.selected.assign(result.ranking.begin(),
                         result.ranking.begin() + static_cast<ptrdiff_t>(result.chosen_k));
  return result;
}

SelectionResult SelectFeatures(const FeatureMatrix& matrix, uint64_t split_seed,
                               std::span<const size_t> grid) {
  std::vector<std::string> names = matrix.catalog.Names();
  PreparedSplit data = PrepareSplit(matrix, names, split_seed);
  std::vector<size_t> ranking = RecursiveFeatureElimination(data.train, data.y_train);
  SelectionResult result = SweepK(data.train, data.y_train, data.validation, data.y_validation,
                                  ranking, grid, names);
  result.split_seed = split_seed;
  result.matrix_hash = matrix.Hash();
  return result;
}

nlohmann::json SelectionResult::ToJson() const {
  nlohmann::json table = nlohmann::json::array();
  for (const SweepPoint& p : sweep)
    table.push_back({{"k", p.k}, {"accuracy", p.accuracy}});
  return {{"ranking", ranking},   {"chosen_k", chosen_k},     {"selected", selected},
          {"sweep", table},       {"split_seed", split_seed}, {"matrix_hash", matrix_hash}};
}

SelectionResult SelectionResult::FromJson(const nlohmann::json& json) {
  SelectionResult r;
  try {
    r.ranking = json.at("ranking").get<std::vector<std::string>>();
    r.chosen_k = json.at("chosen_k").get<size_t>();
    r.selected = json.at("selected").get<std::vector<std::string>>();
    for (const auto& p : json.at("sweep"))
      r.sweep.push_back({p.at("k").get<size_t>(), p.at("accuracy").get<double>()});
    r.split_seed = json.value("split_seed", uint64_t{0});
    r.matrix_hash = json.value("matrix_hash", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed selection document: ") + e.what());
  }
  if (r.chosen_k > r.ranking.size() ||
      !std::equal(r.selected.begin(), r.selected.end(), r.ranking.begin()) ||
      r.selected.size() != r.chosen_k)
    throw InvariantError("selected features must be the first chosen_k of the ranking");
  return r;
}

SelectionResult SelectionResult::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot read " + path.string());
  try {
    return FromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace sitelens
