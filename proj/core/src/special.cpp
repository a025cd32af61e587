#include "pap/special.hpp"

#include <cmath>
#include <numbers>

namespace pap {

namespace {

constexpr double kSeriesCutoff = 2.5;

// Maclaurin series erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1)),
// accurate to ~1e-16 for |x| <= 2.5 in f64.
double erf_series(double x) {
  double term = x;
  double sum = x;
  double x2 = x * x;
  for (int n = 1; n < 80; ++n) {
    term *= -x2 / n;
    double add = term / (2 * n + 1);
    sum += add;
    if (std::abs(add) < 1e-18 * std::abs(sum)) break;
  }
  return sum * 2.0 / std::sqrt(std::numbers::pi);
}

// Lentz continued fraction for erfc(x), x > 0:
// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
double erfc_cf(double x) {
  const double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int n = 1; n < 300; ++n) {
    double a = n / 2.0;
    d = x + a * d;
    if (d == 0.0) d = tiny;
    c = x + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x * x) / (std::sqrt(std::numbers::pi) * f);
}

}  // namespace

double erf_precise(double x) {
  if (std::abs(x) <= kSeriesCutoff) return erf_series(x);
  double tail = erfc_cf(std::abs(x));
  return x > 0.0 ? 1.0 - tail : tail - 1.0;
}

double erfc_precise(double x) {
  if (x > kSeriesCutoff) return erfc_cf(x);
  if (x < -kSeriesCutoff) return 2.0 - erfc_cf(-x);
  return 1.0 - erf_series(x);
}

double normal_cdf(double z) { return 0.5 * erfc_precise(-z / std::numbers::sqrt2); }

}  // namespace pap
