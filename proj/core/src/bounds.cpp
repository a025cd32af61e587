#include "pap/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pap/errors.hpp"
#include "pap/rng.hpp"
#include "pap/special.hpp"

namespace pap {

namespace {

constexpr double kTwoOverPi = 2.0 / std::numbers::pi;

double lipschitz_g(LipschitzKind kind, double lipschitz, std::span<const double> x) {
  double acc = 0.0;
  switch (kind) {
    case LipschitzKind::l1_norm:
      for (double v : x) acc += std::abs(v);
      return lipschitz * acc;
    case LipschitzKind::linear:
      for (double v : x) acc += v;
      return lipschitz * acc;
  }
  throw ValidationError("invalid Lipschitz kind");
}

std::vector<double> finite_diff_grad(const LogDensity& f, std::span<const double> x, double h) {
  std::vector<double> p(x.begin(), x.end());
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    double orig = p[i];
    p[i] = orig + h;
    double fp = f(p);
    p[i] = orig - h;
    double fm = f(p);
    p[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Central second differences of -f (the Hessian of the negative log-density).
std::vector<double> finite_diff_neg_hessian(const LogDensity& f, std::span<const double> x,
                                            double h, std::size_t k) {
  std::vector<double> p(x.begin(), x.end());
  std::vector<double> hess(k * k);
  double f0 = f(p);
  for (std::size_t i = 0; i < k; ++i) {
    double oi = p[i];
    p[i] = oi + h;
    double fp = f(p);
    p[i] = oi - h;
    double fm = f(p);
    p[i] = oi;
    hess[i * k + i] = -(fp - 2.0 * f0 + fm) / (h * h);
    for (std::size_t j = i + 1; j < k; ++j) {
      double oj = p[j];
      p[i] = oi + h; p[j] = oj + h;
      double fpp = f(p);
      p[j] = oj - h;
      double fpm = f(p);
      p[i] = oi - h; p[j] = oj + h;
      double fmp = f(p);
      p[j] = oj - h;
      double fmm = f(p);
      p[i] = oi; p[j] = oj;
      double v = -(fpp - fpm - fmp + fmm) / (4.0 * h * h);
      hess[i * k + j] = v;
      hess[j * k + i] = v;
    }
  }
  return hess;
}

std::vector<std::vector<double>> probe_directions(std::size_t k) {
  std::vector<std::vector<double>> dirs;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> d(k, 0.0);
    d[i] = 1.0;
    dirs.push_back(d);
    d[i] = -1.0;
    dirs.push_back(d);
  }
  if (k > 1) {
    Rng rng(0x9e3779b9u);  // fixed probe seed, deterministic
    for (int s = 0; s < 16; ++s) {
      std::vector<double> d = rng.gaussian_vector(k);
      double norm = 0.0;
      for (double v : d) norm += v * v;
      norm = std::sqrt(norm);
      for (auto& v : d) v /= norm;
      dirs.push_back(std::move(d));
    }
  }
  return dirs;
}

}  // namespace

FoldedNormalStats folded_normal_stats(const FoldedNormalParams& p) {
  if (!(p.sigma > 0.0)) throw ValidationError("folded_normal_stats: sigma must be > 0");
  double mu = p.mu;
  double sigma = p.sigma;
  FoldedNormalStats s;
  s.mean = sigma * std::sqrt(kTwoOverPi) * std::exp(-mu * mu / (2.0 * sigma * sigma)) +
           mu * (1.0 - 2.0 * normal_cdf(-mu / sigma));
  s.variance = mu * mu + sigma * sigma - s.mean * s.mean;
  return s;
}

LipschitzKind lipschitz_kind_from_string(const std::string& s) {
  if (s == "l1_norm") return LipschitzKind::l1_norm;
  if (s == "linear") return LipschitzKind::linear;
  throw ValidationError("unknown Lipschitz kind: " + s);
}

BoundReport verify_single_sample_bound(double lipschitz, std::size_t n, std::size_t dim,
                                       LipschitzKind kind, std::size_t trials, std::uint64_t seed,
                                       double tolerance) {
  if (n == 0 || dim == 0 || trials == 0) {
    throw ValidationError("verify_single_sample_bound: n, dim, trials must be > 0");
  }
  Rng root(seed);
  double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  double gap_sum = 0.0;
  std::vector<double> mean_x(dim);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng = root.child(trial);
    std::fill(mean_x.begin(), mean_x.end(), 0.0);
    double g_avg = 0.0;
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : x) v = rng.gaussian();
      g_avg += lipschitz_g(kind, lipschitz, x);
      for (std::size_t d = 0; d < dim; ++d) mean_x[d] += x[d];
    }
    g_avg /= static_cast<double>(n);
    // (1/sqrt(n)) * sum x_i, again ~ N(0, I)
    for (auto& v : mean_x) v *= inv_sqrt_n;
    gap_sum += g_avg - lipschitz_g(kind, lipschitz, mean_x);
  }

  BoundReport report;
  report.name = std::string("single_sample_gap_n") + std::to_string(n);
  report.empirical = std::abs(gap_sum / static_cast<double>(trials));
  report.bound = 2.0 * lipschitz * std::sqrt(kTwoOverPi);
  report.trials = trials;
  report.tolerance = tolerance;
  report.seed = seed;
  report.pass = report.empirical <= report.bound * (1.0 + tolerance);
  return report;
}

double cosine_similarity_lower_bound(std::size_t n, double l, double big_d) {
  if (n < 1 || !(l > 0.0) || !(big_d > 0.0)) {
    throw ValidationError("cosine_similarity_lower_bound: need n >= 1, l > 0, D > 0");
  }
  double nm1 = static_cast<double>(n - 1);
  double radicand = big_d * big_d - nm1 * l * l;
  if (radicand < 0.0) {
    throw ValidationError("cosine_similarity_lower_bound: D^2 < (n-1) l^2, bound undefined");
  }
  return (std::sqrt(radicand) + nm1 * l) / (std::sqrt(static_cast<double>(n)) * big_d);
}

double empirical_cosine_dissimilarity(std::span<const double> h, double sigma_sq) {
  if (h.empty()) throw ValidationError("empirical_cosine_dissimilarity: empty vector");
  if (!(sigma_sq > 0.0)) throw ValidationError("empirical_cosine_dissimilarity: sigma_sq must be > 0");
  double sum_inv = 0.0;
  double sum_inv_sq = 0.0;
  for (double v : h) {
    if (!(v > 0.0)) throw ValidationError("empirical_cosine_dissimilarity: entries must be > 0");
    double inv = 1.0 / v;
    sum_inv += inv;
    sum_inv_sq += inv * inv;
  }
  double n = static_cast<double>(h.size());
  double cosine = sum_inv / (std::sqrt(n) * std::sqrt(sum_inv_sq));
  return 1.0 - cosine;
}

LogDensity make_gaussian_logdensity(std::vector<double> mean, double variance) {
  if (!(variance > 0.0)) throw ValidationError("gaussian logdensity: variance must be > 0");
  return [mean = std::move(mean), variance](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      double d = x[i] - mean[i];
      acc += d * d;
    }
    return -acc / (2.0 * variance);
  };
}

LogDensity make_skewed_logdensity(std::vector<double> mean, double variance, double tilt) {
  if (!(variance > 0.0)) throw ValidationError("skewed logdensity: variance must be > 0");
  return [mean = std::move(mean), variance, tilt](std::span<const double> x) {
    double acc = 0.0;
    double cubic = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      double d = x[i] - mean[i];
      acc += d * d;
      cubic += d * d * d;
    }
    return -acc / (2.0 * variance) + tilt * cubic;
  };
}

LaplaceProbeResult laplace_probe(const LogDensity& logdensity, std::vector<double> c_init,
                                 double step, int iters, std::vector<double> radii) {
  if (c_init.empty()) throw ValidationError("laplace_probe: empty start point");
  if (!(step > 0.0) || iters < 1) throw ValidationError("laplace_probe: invalid step/iters");

  std::size_t k = c_init.size();
  const double fd_h = 1e-5;
  std::vector<double> x = std::move(c_init);
  double grad_norm = 0.0;
  for (int it = 0; it < iters; ++it) {
    auto g = finite_diff_grad(logdensity, x, fd_h);
    grad_norm = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      x[i] += step * g[i];
      grad_norm = std::max(grad_norm, std::abs(g[i]));
    }
    if (grad_norm < 1e-10) break;
  }
  if (grad_norm >= 1e-6) {
    throw IterationError("laplace_probe: mode search did not converge");
  }

  auto hess = finite_diff_neg_hessian(logdensity, x, 1e-4, k);

  LaplaceProbeResult result;
  result.mode = x;
  result.hessian_diag.resize(k);
  for (std::size_t i = 0; i < k; ++i) result.hessian_diag[i] = hess[i * k + i];
  result.variance = 1.0 / result.hessian_diag[0];

  if (radii.empty()) {
    for (double rho = 0.01; rho <= 0.3 + 1e-12; rho *= std::pow(30.0, 1.0 / 11.0)) {
      radii.push_back(rho);
    }
  }
  double log_p0 = logdensity(x);
  auto dirs = probe_directions(k);
  std::vector<double> point(k);
  for (double rho : radii) {
    double worst = 0.0;
    for (const auto& u : dirs) {
      for (std::size_t i = 0; i < k; ++i) point[i] = x[i] + rho * u[i];
      double quad = 0.0;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) quad += u[i] * hess[i * k + j] * u[j];
      double fit = log_p0 - 0.5 * rho * rho * quad;
      worst = std::max(worst, std::abs(logdensity(point) - fit));
    }
    result.radii.push_back(rho);
    result.errors.push_back(worst);
  }
  return result;
}

double log_log_slope(std::span<const double> radii, std::span<const double> errors) {
  if (radii.size() != errors.size() || radii.size() < 2) {
    throw ValidationError("log_log_slope: need matching series of length >= 2");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(errors[i] > 0.0)) continue;  // exact fits contribute no slope information
    double lx = std::log(radii[i]);
    double ly = std::log(errors[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw ValidationError("log_log_slope: too few positive errors");
  double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace pap
