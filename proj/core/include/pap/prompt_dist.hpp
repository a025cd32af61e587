#pragma once

#include <vector>

#include "pap/denoiser.hpp"
#include "pap/rng.hpp"
#include "pap/schedule.hpp"
#include "pap/tensor.hpp"

namespace pap {

/// Isotropic Gaussian model of the attacker-prompt distribution.
struct PromptGaussian {
  Tensor mean;
  double variance = 0.0;
};

struct PhiIterate {
  Tensor prompt;
  Tensor momentum;
  double loss = 0.0;  // on the run's fixed evaluation draw (eps_c, t_eval)
};

struct PhiTrace {
  std::vector<PhiIterate> iterates;  // length n_steps + 1, iterate 0 is c0
  std::size_t best_index = 0;
  int eval_t = 0;
};

struct PhiResult {
  Tensor c_hat;
  PhiTrace trace;
};

/// Mean estimator: momentum gradient descent on the diffusion loss averaged
/// over x_set, started at c0. One eps_c is drawn per run and t is resampled
/// per gradient step; trace losses share a fixed (eps_c, t_eval) draw so the
/// best iterate is well defined, and the best-loss iterate is returned.
PhiResult estimate_mean_phi(const DenoiserParams& params, const std::vector<Tensor>& x_set,
                            const Tensor& c0, int n_steps, double step_size, double momentum_beta,
                            const NoiseSchedule& sched, Rng& rng);

struct PsiResult {
  double variance = 0.0;
  bool degenerate = false;
  double raw_delta_loss = 0.0;
};

/// Loss gap below this is clamped so the variance stays finite.
inline constexpr double kPsiDeltaLossMin = 1e-6;

/// Variance estimator: sigma^2 = ||c0 - c_hat||^2 / (2 (L(c0) - L(c_hat)))
/// at the given (x, eps, t); the gap is clamped at kPsiDeltaLossMin and the
/// degenerate flag reports when the clamp engaged.
PsiResult estimate_variance_psi(const DenoiserParams& params, const Tensor& x, const Tensor& eps,
                                int t, const Tensor& c0, const Tensor& c_hat,
                                const NoiseSchedule& sched);

/// mean + sqrt(variance) * z, z ~ N(0, I).
Tensor sample_prompt(const PromptGaussian& g, Rng& rng);

}  // namespace pap
