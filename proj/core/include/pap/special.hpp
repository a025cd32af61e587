#pragma once

namespace pap {

/// Error function, series + continued-fraction evaluation, abs error < 1e-12.
double erf_precise(double x);

double erfc_precise(double x);

/// Standard normal CDF.
double normal_cdf(double z);

}  // namespace pap
