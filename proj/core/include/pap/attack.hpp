#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pap/denoiser.hpp"
#include "pap/prompt_dist.hpp"
#include "pap/schedule.hpp"
#include "pap/tensor.hpp"

namespace pap {

enum class AttackMode { pap, prompt_specific, tanh_space, aspap };

AttackMode attack_mode_from_string(const std::string& s);
std::string attack_mode_to_string(AttackMode m);

struct AttackConfig {
  double eta = 0.05;          // L-inf budget
  double alpha = 1.0 / 255.0; // image step
  int iters = 50;             // M
  int text_steps = 15;        // N
  double text_lr = 0.001;     // r
  double momentum = 0.5;      // beta
  double surrogate_lr = 1e-3; // gamma (aspap)
  int rounds = 1;             // K (aspap)
  int surrogate_steps = 0;    // Max (aspap)
  AttackMode mode = AttackMode::pap;

  void validate() const;
};

struct AttackIterRecord {
  double loss = 0.0;
  double sigma_sq = 0.0;  // 0 for the prompt-specific baseline
  Tensor prompt;          // the c used for this step's gradient
  Tensor x;               // iterate after this step's projection
};

struct ProtectionResult {
  Tensor x_adv;
  std::vector<AttackIterRecord> trace;
  PromptGaussian distribution;  // modeled distribution (mean c_hat, last sigma^2)
  AttackConfig config;
  std::uint64_t seed = 0;
  double achieved_linf = 0.0;
};

/// Elementwise sign with sign(0) = 0.
Tensor sign(const Tensor& v);

/// x + alpha*sign(g), clipped to [x0-eta, x0+eta] and then to [0,1].
Tensor pgd_step(const Tensor& x, const Tensor& grad, double alpha, const Tensor& x0, double eta);

/// Algorithm: model the prompt distribution (phi), then M sign-gradient
/// ascent steps, each on a fresh (eps, t) draw and a prompt sampled from
/// N(c_hat, sigma^2 I) with sigma^2 re-estimated (psi) at the current iterate.
ProtectionResult pap_protect(const DenoiserParams& params, const Tensor& x0, const Tensor& c0,
                             const AttackConfig& cfg, const NoiseSchedule& sched,
                             std::uint64_t seed);

/// Baseline: the same ascent loop with c fixed to c0 (no phi/psi phase).
ProtectionResult prompt_specific_protect(const DenoiserParams& params, const Tensor& x0,
                                         const Tensor& c0, const AttackConfig& cfg,
                                         const NoiseSchedule& sched, std::uint64_t seed);

/// tanh-space variant: optimizes an unconstrained delta with
/// x = (tanh(delta)+1)/2, so no eta box is enforced; the achieved L-inf
/// distance is reported instead.
ProtectionResult tanh_protect(const DenoiserParams& params, const Tensor& x0, const Tensor& c0,
                              const AttackConfig& cfg, const NoiseSchedule& sched,
                              std::uint64_t seed);

struct AspapResult {
  ProtectionResult protection;
  DenoiserParams surrogate;
};

/// Alternating surrogate variant: K rounds of {M attack steps carried
/// forward, then Max single-sample SGD updates of a surrogate model on the
/// current adversarial image at c0}. Clipping is always against the original x0.
AspapResult aspap_protect(const DenoiserParams& params, const Tensor& x0, const Tensor& c0,
                          const AttackConfig& cfg, const NoiseSchedule& sched, std::uint64_t seed);

}  // namespace pap
