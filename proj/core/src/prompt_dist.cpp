#include "pap/prompt_dist.hpp"

#include <cmath>

#include "pap/errors.hpp"

namespace pap {

namespace {

double mean_loss(const DenoiserParams& params, const std::vector<Tensor>& x_set, const Tensor& eps,
                 int t, const Tensor& c, const NoiseSchedule& sched) {
  double acc = 0.0;
  for (const Tensor& x : x_set) acc += diffusion_loss(params, x, eps, t, c, sched);
  return acc / static_cast<double>(x_set.size());
}

Tensor mean_grad_c(const DenoiserParams& params, const std::vector<Tensor>& x_set,
                   const Tensor& eps, int t, const Tensor& c, const NoiseSchedule& sched) {
  Tensor acc = Tensor::zeros(std::vector<std::uint64_t>(c.shape()));
  for (const Tensor& x : x_set) {
    LossGrads g = loss_grad(params, x, eps, t, c, sched, /*want_param_grads=*/false);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g.d_c[i];
  }
  double inv = 1.0 / static_cast<double>(x_set.size());
  for (auto& v : acc.data()) v *= inv;
  return acc;
}

}  // namespace

PhiResult estimate_mean_phi(const DenoiserParams& params, const std::vector<Tensor>& x_set,
                            const Tensor& c0, int n_steps, double step_size, double momentum_beta,
                            const NoiseSchedule& sched, Rng& rng) {
  if (x_set.empty()) throw ValidationError("estimate_mean_phi: empty image set");
  if (n_steps < 0) throw ValidationError("estimate_mean_phi: n_steps must be >= 0");
  if (!(step_size > 0.0)) throw ValidationError("estimate_mean_phi: step_size must be > 0");
  if (!(momentum_beta >= 0.0 && momentum_beta < 1.0)) {
    throw ValidationError("estimate_mean_phi: momentum_beta must be in [0, 1)");
  }

  // Single eps_c per run; t_eval fixes the loss basis used to pick the best iterate.
  Tensor eps_c = rng.gaussian_tensor(std::vector<std::uint64_t>(x_set.front().shape()));
  int t_eval = static_cast<int>(rng.uniform_int(1, sched.steps));

  PhiResult result;
  result.trace.eval_t = t_eval;
  Tensor c = c0;
  Tensor m = Tensor::zeros(std::vector<std::uint64_t>(c0.shape()));
  result.trace.iterates.push_back({c, m, mean_loss(params, x_set, eps_c, t_eval, c, sched)});

  for (int j = 0; j < n_steps; ++j) {
    int t = static_cast<int>(rng.uniform_int(1, sched.steps));
    Tensor g = mean_grad_c(params, x_set, eps_c, t, c, sched);
    if (!g.all_finite()) {
      throw IterationError("estimate_mean_phi: non-finite gradient at step " + std::to_string(j));
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = momentum_beta * m[i] + (1.0 - momentum_beta) * g[i];
      c[i] -= step_size * m[i];
    }
    result.trace.iterates.push_back({c, m, mean_loss(params, x_set, eps_c, t_eval, c, sched)});
  }

  std::size_t best = 0;
  for (std::size_t j = 1; j < result.trace.iterates.size(); ++j) {
    if (result.trace.iterates[j].loss < result.trace.iterates[best].loss) best = j;
  }
  result.trace.best_index = best;
  result.c_hat = result.trace.iterates[best].prompt;
  return result;
}

PsiResult estimate_variance_psi(const DenoiserParams& params, const Tensor& x, const Tensor& eps,
                                int t, const Tensor& c0, const Tensor& c_hat,
                                const NoiseSchedule& sched) {
  Tensor diff = c0;
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= c_hat[i];
  double numerator = diff.squared_norm();
  if (numerator == 0.0) {
    throw ValidationError("estimate_variance_psi: c0 equals c_hat (degenerate input)");
  }
  double loss_c0 = diffusion_loss(params, x, eps, t, c0, sched);
  double loss_hat = diffusion_loss(params, x, eps, t, c_hat, sched);
  PsiResult r;
  r.raw_delta_loss = loss_c0 - loss_hat;
  double delta = r.raw_delta_loss;
  if (delta <= kPsiDeltaLossMin) {
    delta = kPsiDeltaLossMin;
    r.degenerate = true;
  }
  r.variance = numerator / (2.0 * delta);
  return r;
}

Tensor sample_prompt(const PromptGaussian& g, Rng& rng) {
  if (!(g.variance >= 0.0) || !std::isfinite(g.variance)) {
    throw ValidationError("sample_prompt: variance must be finite and >= 0");
  }
  double sd = std::sqrt(g.variance);
  Tensor out = g.mean;
  for (auto& v : out.data()) v += sd * rng.gaussian();
  return out;
}

}  // namespace pap
