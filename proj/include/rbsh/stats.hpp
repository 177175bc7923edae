#pragma once

#include <vector>

namespace rbsh::stats {

struct PairedTTest {
  double t = 0;
  double p = 1;  // two-tailed
  std::size_t n = 0;
  double mean_diff = 0;
};

/// Paired two-tailed t-test on aligned score vectors.
PairedTTest paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

}  // namespace rbsh::stats
