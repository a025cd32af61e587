#include "pap/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pap/errors.hpp"

namespace pap {

namespace {

// One-sided Student-t critical values, df 1..20; larger df reuses df=20
// (conservative).
constexpr double kCrit01[] = {31.821, 6.965, 4.541, 3.747, 3.365, 3.143, 2.998,
                              2.896,  2.821, 2.764, 2.718, 2.681, 2.650, 2.624,
                              2.602,  2.583, 2.567, 2.552, 2.539, 2.528};
constexpr double kCrit05[] = {6.314, 2.920, 2.353, 2.132, 2.015, 1.943, 1.895,
                              1.860, 1.833, 1.812, 1.796, 1.782, 1.771, 1.761,
                              1.753, 1.746, 1.740, 1.734, 1.729, 1.725};

double critical_value(std::size_t df, double alpha) {
  const double* table = nullptr;
  if (alpha == 0.01) table = kCrit01;
  else if (alpha == 0.05) table = kCrit05;
  else throw ValidationError("paired_t_test: alpha must be 0.01 or 0.05");
  if (df < 1) throw ValidationError("paired_t_test: need at least 2 pairs");
  return table[std::min<std::size_t>(df, 20) - 1];
}

}  // namespace

double mean(std::span<const double> v) {
  if (v.empty()) throw ValidationError("mean: empty input");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw ValidationError("sample_variance: need at least 2 values");
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ValidationError("paired_t_test: need matching series of length >= 2");
  }
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  PairedTest r;
  r.mean_diff = mean(diff);
  double sd = std::sqrt(sample_variance(diff));
  double n = static_cast<double>(diff.size());
  if (sd == 0.0) {
    r.t_statistic = r.mean_diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    r.t_statistic = r.mean_diff / (sd / std::sqrt(n));
  }
  r.significant = r.t_statistic > critical_value(diff.size() - 1, alpha);
  return r;
}

}  // namespace pap
