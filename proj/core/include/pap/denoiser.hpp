#pragma once

#include <cstdint>

#include "pap/rng.hpp"
#include "pap/schedule.hpp"
#include "pap/tensor.hpp"

namespace pap {

/// Fixed small conditional denoiser: MLP over
/// [flattened x_t | sinusoidal time features | prompt embedding],
/// two tanh hidden layers of width 128, linear output of image size.
/// Every primitive is smooth, so second-order expansions are meaningful.
struct DenoiserParams {
  static constexpr std::size_t kHiddenWidth = 128;
  static constexpr std::size_t kTimeFeatures = 8;

  std::uint64_t image_h = 0;
  std::uint64_t image_w = 0;
  std::uint64_t embed_dim = 0;

  Tensor w1, b1;  // hidden x input, hidden
  Tensor w2, b2;  // hidden x hidden, hidden
  Tensor w3, b3;  // output x hidden, output

  std::size_t input_dim() const {
    return static_cast<std::size_t>(image_h * image_w) + kTimeFeatures +
           static_cast<std::size_t>(embed_dim);
  }
  std::size_t output_dim() const { return static_cast<std::size_t>(image_h * image_w); }

  /// Seeded Gaussian init, std = 1/sqrt(fan_in); biases zero.
  static DenoiserParams init(std::uint64_t image_h, std::uint64_t image_w,
                             std::uint64_t embed_dim, Rng& rng);
  static DenoiserParams zeros(std::uint64_t image_h, std::uint64_t image_w,
                              std::uint64_t embed_dim);

  void check_shapes() const;
};

/// Gradients with the same layout as the parameters.
struct DenoiserGrads {
  Tensor w1, b1, w2, b2, w3, b3;
};

std::vector<double> time_features(int t);

/// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps.
Tensor forward_noise(const Tensor& x0, const Tensor& eps, int t, const NoiseSchedule& sched);

Tensor denoiser_forward(const DenoiserParams& params, const Tensor& x_t, int t, const Tensor& c);

/// L = || eps - eps_theta(x_t, t, c) ||_2^2 with x_t from forward_noise.
double diffusion_loss(const DenoiserParams& params, const Tensor& x0, const Tensor& eps, int t,
                      const Tensor& c, const NoiseSchedule& sched);

struct LossGrads {
  double loss = 0.0;
  Tensor d_x0;  // gradient w.r.t. the clean image input
  Tensor d_c;   // gradient w.r.t. the prompt embedding
  DenoiserGrads d_params;
};

/// Analytic reverse-mode gradients of diffusion_loss.
LossGrads loss_grad(const DenoiserParams& params, const Tensor& x0, const Tensor& eps, int t,
                    const Tensor& c, const NoiseSchedule& sched, bool want_param_grads = true);

}  // namespace pap
