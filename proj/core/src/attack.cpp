#include "pap/attack.hpp"

#include <algorithm>
#include <cmath>

#include "pap/errors.hpp"
#include "pap/train.hpp"

namespace pap {

namespace {

constexpr double kTanhSqueeze = 1e-6;

double linf_distance(const Tensor& a, const Tensor& b) { return a.max_abs_diff(b); }

// One modeled-prompt draw for the current iterate: psi at (x, eps, t), then
// c = c_hat + sqrt(sigma^2) * z.  When the current (eps, t) draw makes the
// loss gap degenerate, the clamped estimate would blow the variance up, so the
// last informative sigma^2 is held instead of sampling an arbitrarily wide
// Gaussian.
Tensor draw_attack_prompt(const DenoiserParams& params, const Tensor& x, const Tensor& eps, int t,
                          const Tensor& c0, const Tensor& c_hat, const NoiseSchedule& sched,
                          Rng& rng, double& last_good_sigma_sq, double& sigma_sq_out) {
  if (c_hat == c0) {  // phi kept c0: psi is undefined, collapse to a point mass
    sigma_sq_out = 0.0;
    return c_hat;
  }
  PsiResult psi = estimate_variance_psi(params, x, eps, t, c0, c_hat, sched);
  if (psi.degenerate && last_good_sigma_sq > 0.0) {
    sigma_sq_out = last_good_sigma_sq;
  } else {
    sigma_sq_out = psi.variance;
    if (!psi.degenerate) last_good_sigma_sq = psi.variance;
  }
  PromptGaussian g{c_hat, sigma_sq_out};
  return sample_prompt(g, rng);
}

// M sign-gradient ascent steps starting from x_start, clipped against x0.
void ascent_loop(const DenoiserParams& params, const Tensor& x0, const Tensor& c0,
                 const Tensor* c_hat, const AttackConfig& cfg, const NoiseSchedule& sched,
                 Rng& rng, Tensor& x, std::vector<AttackIterRecord>& trace, double& last_sigma_sq,
                 double& last_good_sigma_sq) {
  for (int i = 0; i < cfg.iters; ++i) {
    Tensor eps = rng.gaussian_tensor(std::vector<std::uint64_t>(x0.shape()));
    int t = static_cast<int>(rng.uniform_int(1, sched.steps));
    AttackIterRecord rec;
    if (c_hat != nullptr) {
      rec.prompt = draw_attack_prompt(params, x, eps, t, c0, *c_hat, sched, rng,
                                      last_good_sigma_sq, rec.sigma_sq);
      last_sigma_sq = rec.sigma_sq;
    } else {
      rec.prompt = c0;
    }
    LossGrads g = loss_grad(params, x, eps, t, rec.prompt, sched, /*want_param_grads=*/false);
    rec.loss = g.loss;
    x = pgd_step(x, g.d_x0, cfg.alpha, x0, cfg.eta);
    rec.x = x;
    trace.push_back(std::move(rec));
  }
}

}  // namespace

AttackMode attack_mode_from_string(const std::string& s) {
  if (s == "pap") return AttackMode::pap;
  if (s == "specific") return AttackMode::prompt_specific;
  if (s == "tanh") return AttackMode::tanh_space;
  if (s == "aspap") return AttackMode::aspap;
  throw ValidationError("unknown attack mode: " + s);
}

std::string attack_mode_to_string(AttackMode m) {
  switch (m) {
    case AttackMode::pap: return "pap";
    case AttackMode::prompt_specific: return "specific";
    case AttackMode::tanh_space: return "tanh";
    case AttackMode::aspap: return "aspap";
  }
  return "pap";
}

void AttackConfig::validate() const {
  if (!(eta > 0.0)) throw ValidationError("attack config: eta must be > 0");
  if (!(alpha > 0.0)) throw ValidationError("attack config: alpha must be > 0");
  if (alpha > eta) throw ValidationError("attack config: alpha must be <= eta");
  if (iters < 0 || text_steps < 0 || rounds < 0 || surrogate_steps < 0) {
    throw ValidationError("attack config: counts must be >= 0");
  }
  if (!(text_lr > 0.0)) throw ValidationError("attack config: text_lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ValidationError("attack config: momentum must be in [0, 1)");
  }
  if (mode == AttackMode::aspap && rounds < 1) {
    throw ValidationError("attack config: aspap needs rounds >= 1");
  }
}

Tensor sign(const Tensor& v) {
  Tensor out = v;
  for (auto& x : out.data()) x = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  return out;
}

Tensor pgd_step(const Tensor& x, const Tensor& grad, double alpha, const Tensor& x0, double eta) {
  if (!x.same_shape(grad) || !x.same_shape(x0)) throw ValidationError("pgd_step: shape mismatch");
  if (!(alpha > 0.0) || !(eta > 0.0)) throw ValidationError("pgd_step: alpha, eta must be > 0");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double g = grad[i];
    double step = g > 0.0 ? alpha : (g < 0.0 ? -alpha : 0.0);
    double v = x[i] + step;
    v = std::clamp(v, x0[i] - eta, x0[i] + eta);
    out[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

ProtectionResult pap_protect(const DenoiserParams& params, const Tensor& x0, const Tensor& c0,
                             const AttackConfig& cfg, const NoiseSchedule& sched,
                             std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  Rng phi_rng = rng.child("phi");
  PhiResult phi = estimate_mean_phi(params, {x0}, c0, cfg.text_steps, cfg.text_lr, cfg.momentum,
                                    sched, phi_rng);

  ProtectionResult result;
  result.config = cfg;
  result.seed = seed;
  Tensor x = x0;
  double last_sigma_sq = 0.0;
  double last_good_sigma_sq = 0.0;
  Rng attack_rng = rng.child("attack");
  ascent_loop(params, x0, c0, &phi.c_hat, cfg, sched, attack_rng, x, result.trace, last_sigma_sq,
              last_good_sigma_sq);
  result.x_adv = std::move(x);
  result.distribution = PromptGaussian{phi.c_hat, last_sigma_sq};
  result.achieved_linf = linf_distance(result.x_adv, x0);
  return result;
}

ProtectionResult prompt_specific_protect(const DenoiserParams& params, const Tensor& x0,
                                         const Tensor& c0, const AttackConfig& cfg,
                                         const NoiseSchedule& sched, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ProtectionResult result;
  result.config = cfg;
  result.seed = seed;
  Tensor x = x0;
  double unused = 0.0;
  double unused_good = 0.0;
  Rng attack_rng = rng.child("attack");
  ascent_loop(params, x0, c0, nullptr, cfg, sched, attack_rng, x, result.trace, unused,
              unused_good);
  result.x_adv = std::move(x);
  result.distribution = PromptGaussian{c0, 0.0};
  result.achieved_linf = linf_distance(result.x_adv, x0);
  return result;
}

ProtectionResult tanh_protect(const DenoiserParams& params, const Tensor& x0, const Tensor& c0,
                              const AttackConfig& cfg, const NoiseSchedule& sched,
                              std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  Rng phi_rng = rng.child("phi");
  PhiResult phi = estimate_mean_phi(params, {x0}, c0, cfg.text_steps, cfg.text_lr, cfg.momentum,
                                    sched, phi_rng);

  // delta = atanh(2 x - 1) with x squeezed away from {0, 1}.
  Tensor delta = x0;
  for (auto& v : delta.data()) {
    double squeezed = std::clamp(v, kTanhSqueeze, 1.0 - kTanhSqueeze);
    v = std::atanh(2.0 * squeezed - 1.0);
  }
  auto to_image = [](const Tensor& d) {
    Tensor img = d;
    for (auto& v : img.data()) v = 0.5 * (std::tanh(v) + 1.0);
    return img;
  };

  ProtectionResult result;
  result.config = cfg;
  result.seed = seed;
  double last_sigma_sq = 0.0;
  double last_good_sigma_sq = 0.0;
  Rng attack_rng = rng.child("attack");
  for (int i = 0; i < cfg.iters; ++i) {
    Tensor x = to_image(delta);
    Tensor eps = attack_rng.gaussian_tensor(std::vector<std::uint64_t>(x0.shape()));
    int t = static_cast<int>(attack_rng.uniform_int(1, sched.steps));
    AttackIterRecord rec;
    rec.prompt = draw_attack_prompt(params, x, eps, t, c0, phi.c_hat, sched, attack_rng,
                                    last_good_sigma_sq, rec.sigma_sq);
    last_sigma_sq = rec.sigma_sq;
    LossGrads g = loss_grad(params, x, eps, t, rec.prompt, sched, /*want_param_grads=*/false);
    rec.loss = g.loss;
    // dL/ddelta = dL/dx * (1 - tanh^2(delta)) / 2, then an unconstrained sign step.
    for (std::size_t p = 0; p < delta.size(); ++p) {
      double th = std::tanh(delta[p]);
      double gd = g.d_x0[p] * 0.5 * (1.0 - th * th);
      delta[p] += cfg.alpha * (gd > 0.0 ? 1.0 : (gd < 0.0 ? -1.0 : 0.0));
    }
    rec.x = to_image(delta);
    result.trace.push_back(std::move(rec));
  }
  result.x_adv = to_image(delta);
  result.distribution = PromptGaussian{phi.c_hat, last_sigma_sq};
  result.achieved_linf = linf_distance(result.x_adv, x0);
  return result;
}

AspapResult aspap_protect(const DenoiserParams& params, const Tensor& x0, const Tensor& c0,
                          const AttackConfig& cfg, const NoiseSchedule& sched,
                          std::uint64_t seed) {
  cfg.validate();
  if (cfg.rounds < 1) throw ValidationError("aspap_protect: rounds must be >= 1");
  Rng rng(seed);
  Rng phi_rng = rng.child("phi");
  PhiResult phi = estimate_mean_phi(params, {x0}, c0, cfg.text_steps, cfg.text_lr, cfg.momentum,
                                    sched, phi_rng);

  AspapResult result;
  result.surrogate = params;
  result.protection.config = cfg;
  result.protection.seed = seed;

  Tensor x = x0;  // carried forward across rounds
  double last_sigma_sq = 0.0;
  double last_good_sigma_sq = 0.0;
  Rng attack_rng = rng.child("attack");
  Rng surrogate_rng = rng.child("surrogate");
  for (int k = 0; k < cfg.rounds; ++k) {
    ascent_loop(result.surrogate, x0, c0, &phi.c_hat, cfg, sched, attack_rng, x,
                result.protection.trace, last_sigma_sq, last_good_sigma_sq);
    for (int m = 0; m < cfg.surrogate_steps; ++m) {
      Tensor eps = surrogate_rng.gaussian_tensor(std::vector<std::uint64_t>(x0.shape()));
      int t = static_cast<int>(surrogate_rng.uniform_int(1, sched.steps));
      sgd_step(result.surrogate, x, eps, t, c0, sched, cfg.surrogate_lr);
    }
  }
  result.protection.x_adv = std::move(x);
  result.protection.distribution = PromptGaussian{phi.c_hat, last_sigma_sq};
  result.protection.achieved_linf = linf_distance(result.protection.x_adv, x0);
  return result;
}

}  // namespace pap
