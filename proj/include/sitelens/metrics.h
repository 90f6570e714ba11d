#pragma once

#include <span>

#include "json.hpp"

namespace sitelens {

// Binary classification metrics. Every rate except auc is the
// support-weighted average of the per-class values over both classes.
struct Metrics {
  double tp_rate = 0.0;
  double fp_rate = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  double accuracy = 0.0;

  nlohmann::json ToJson() const;
};

// Area under the ROC curve by trapezoidal integration over every distinct
// score threshold. Tied scores form one diagonal step, which equals the
// Mann-Whitney statistic with half credit per tie. Labels are 0/1 with 1 as
// the positive class. Throws UsageError unless both classes are present.
double RocAuc(std::span<const double> scores, std::span<const int> labels);

// |scores| are probabilities of class 1; a row is predicted 1 when its
// score is >= threshold.
Metrics Evaluate(std::span<const double> scores, std::span<const int> labels,
                 double threshold = 0.5);

}  // namespace sitelens
