#pragma once

#include <span>

namespace sitelens {

struct KsResult {
  double statistic = 0.0;  // sup_x |F_a(x) - F_b(x)|
  double p_value = 1.0;    // asymptotic Kolmogorov tail probability
};

// Two-sample Kolmogorov-Smirnov test. Ties inside and across samples are
// handled by evaluating both ECDFs after every distinct value. Throws
// UsageError on an empty sample.
KsResult KsTwoSample(std::span<const double> sample_a,
                     std::span<const double> sample_b);

// Q_KS(lambda) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2).
double KolmogorovTail(double lambda);

}  // namespace sitelens
