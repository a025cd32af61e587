#pragma once

#include <span>

namespace pap {

double mean(std::span<const double> v);
double sample_variance(std::span<const double> v);

struct PairedTest {
  double mean_diff = 0.0;
  double t_statistic = 0.0;
  bool significant = false;  // one-sided, mean_diff > 0
};

/// One-sided paired t-test of a > b at significance alpha in {0.05, 0.01}.
PairedTest paired_t_test(std::span<const double> a, std::span<const double> b,
                         double alpha = 0.01);

}  // namespace pap
