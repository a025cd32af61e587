#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pap {

struct FoldedNormalParams {
  double mu = 0.0;
  double sigma = 1.0;
};

struct FoldedNormalStats {
  double mean = 0.0;
  double variance = 0.0;
};

/// Closed-form mean/variance of |X| for X ~ N(mu, sigma^2).
FoldedNormalStats folded_normal_stats(const FoldedNormalParams& p);

struct BoundReport {
  std::string name;
  double empirical = 0.0;
  double bound = 0.0;
  std::size_t trials = 0;
  double tolerance = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
};

enum class LipschitzKind { l1_norm, linear };

LipschitzKind lipschitz_kind_from_string(const std::string& s);

/// Empirical check of the single-sample averaging bound: estimates
/// E[(1/n) sum g(x_i) - g((1/sqrt(n)) sum x_i)] with x_i ~ N(0, I_dim) and
/// compares |mean gap| against 2 L sqrt(2/pi) with the given slack.
BoundReport verify_single_sample_bound(double lipschitz, std::size_t n, std::size_t dim,
                                       LipschitzKind kind, std::size_t trials, std::uint64_t seed,
                                       double tolerance = 1e-2);

/// Closed-form lower bound on cos(isotropic inverse-Hessian, diagonal
/// inverse-Hessian): (sqrt(D^2 - (n-1) l^2) + (n-1) l) / (sqrt(n) D).
/// Requires D^2 >= (n-1) l^2.
double cosine_similarity_lower_bound(std::size_t n, double l, double big_d);

/// 1 - cos(vector(1/h_i), isotropic direction); sigma_sq only fixes the
/// isotropic surrogate's scale, which cancels in the angle.
double empirical_cosine_dissimilarity(std::span<const double> h, double sigma_sq);

using LogDensity = std::function<double(std::span<const double>)>;

LogDensity make_gaussian_logdensity(std::vector<double> mean, double variance);
/// Gaussian log-density plus a cubic tilt around the mean (local skew).
LogDensity make_skewed_logdensity(std::vector<double> mean, double variance, double tilt);

struct LaplaceProbeResult {
  std::vector<double> mode;
  std::vector<double> hessian_diag;  // of -logdensity at the mode
  double variance = 0.0;             // 1/hessian_diag[0] for 1-D targets
  std::vector<double> radii;
  std::vector<double> errors;  // e(rho) = max_{|x-mode|=rho} |log p - log fit|
};

/// Gradient-ascent mode finding plus central-difference Hessian, then an
/// error curve of the Gaussian fit at increasing radii.
LaplaceProbeResult laplace_probe(const LogDensity& logdensity, std::vector<double> c_init,
                                 double step, int iters, std::vector<double> radii = {});

/// Least-squares slope of log(e) against log(rho).
double log_log_slope(std::span<const double> radii, std::span<const double> errors);

}  // namespace pap
