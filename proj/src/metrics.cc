#include "sitelens/metrics.h"

#include <algorithm>
#include <array>
#include <numeric>
#include <vector>

#include "sitelens/error.h"

namespace sitelens {
namespace {

void CheckInputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw UsageError("scores and labels differ in length");
  size_t positives = 0;
  for (int label : labels) {
    if (label != 0 && label != 1)
      throw UsageError("labels must be 0 or 1");
    positives += static_cast<size_t>(label);
  }
  if (positives == 0 || positives == labels.size())
    throw UsageError("both classes must be present to evaluate");
}

}  // namespace

double RocAuc(std::span<const double> scores, std::span<const int> labels) {
  CheckInputs(scores, labels);
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  double positives = 0.0, negatives = 0.0;
  for (int label : labels)
    (label == 1 ? positives : negatives) += 1.0;

  // Sweep thresholds from high to low; each group of tied scores moves the
  // ROC point diagonally.
  double area = 0.0;
  double tp = 0.0, fp = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    double prev_tp = tp, prev_fp = fp;
    double score = scores[order[i]];
    while (i < order.size() && scores[order[i]] == score) {
      (labels[order[i]] == 1 ? tp : fp) += 1.0;
      ++i;
    }
    area += (fp - prev_fp) * (tp + prev_tp) / 2.0;
  }
  return area / (positives * negatives);
}

Metrics Evaluate(std::span<const double> scores, std::span<const int> labels,
                 double threshold) {
  CheckInputs(scores, labels);
  // confusion[actual][predicted]
  std::array<std::array<double, 2>, 2> confusion{};
  for (size_t i = 0; i < scores.size(); ++i) {
    int predicted = scores[i] >= threshold ? 1 : 0;
    confusion[labels[i]][predicted] += 1.0;
  }
  const double total = static_cast<double>(scores.size());

  Metrics m;
  for (int c = 0; c < 2; ++c) {
    int other = 1 - c;
    double support = confusion[c][0] + confusion[c][1];
    double tp = confusion[c][c];
    double fp = confusion[other][c];
    double tn = confusion[other][other];
    double predicted = tp + fp;

    double recall = support > 0.0 ? tp / support : 0.0;
    double fp_rate = (fp + tn) > 0.0 ? fp / (fp + tn) : 0.0;
    double precision = predicted > 0.0 ? tp / predicted : 0.0;
    double f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                           : 0.0;
    double weight = support / total;
    m.tp_rate += weight * recall;
    m.recall += weight * recall;
    m.fp_rate += weight * fp_rate;
    m.precision += weight * precision;
    m.f1 += weight * f1;
  }
  m.accuracy = (confusion[0][0] + confusion[1][1]) / total;
  m.auc = RocAuc(scores, labels);
  return m;
}

nlohmann::json Metrics::ToJson() const {
  return {{"tp_rate", tp_rate}, {"fp_rate", fp_rate}, {"precision", precision},
          {"recall", recall},   {"f1", f1},           {"auc", auc},
          {"accuracy", accuracy}};
}

}  // namespace sitelens
