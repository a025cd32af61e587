#include "pap/train.hpp"

#include <algorithm>
#include <cmath>

#include "pap/errors.hpp"

namespace pap {

namespace {

void axpy(Tensor& dst, const Tensor& g, double scale) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * g[i];
}

}  // namespace

double sgd_step(DenoiserParams& params, const Tensor& x0, const Tensor& eps, int t,
                const Tensor& c, const NoiseSchedule& sched, double lr) {
  LossGrads g = loss_grad(params, x0, eps, t, c, sched, /*want_param_grads=*/true);
  axpy(params.w1, g.d_params.w1, -lr);
  axpy(params.b1, g.d_params.b1, -lr);
  axpy(params.w2, g.d_params.w2, -lr);
  axpy(params.b2, g.d_params.b2, -lr);
  axpy(params.w3, g.d_params.w3, -lr);
  axpy(params.b3, g.d_params.b3, -lr);
  return g.loss;
}

TrainResult train_toy(const DenoiserParams& init, const ToyDataset& dataset,
                      const NoiseSchedule& sched, int epochs, double lr, Rng& rng) {
  if (dataset.images.empty()) throw ValidationError("train_toy: empty dataset");
  if (epochs < 0) throw ValidationError("train_toy: epochs must be >= 0");

  TrainResult result;
  result.params = init;
  Rng stream = rng.child("train");
  for (int e = 0; e < epochs; ++e) {
    double epoch_loss = 0.0;
    for (std::size_t i = 0; i < dataset.images.size(); ++i) {
      int t = static_cast<int>(stream.uniform_int(1, sched.steps));
      Tensor eps = stream.gaussian_tensor(std::vector<std::uint64_t>(dataset.images[i].shape()));
      epoch_loss += sgd_step(result.params, dataset.images[i], eps, t, dataset.embeddings[i],
                             sched, lr);
    }
    epoch_loss /= static_cast<double>(dataset.images.size());
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("train_toy: loss diverged at epoch " + std::to_string(e),
                          std::move(result.epoch_loss));
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  return result;
}

Tensor ddpm_sample(const DenoiserParams& params, const NoiseSchedule& sched, const Tensor& c,
                   Rng& rng) {
  std::vector<std::uint64_t> shape{params.image_h, params.image_w};
  Tensor x = rng.gaussian_tensor(shape);
  for (int t = sched.steps; t >= 1; --t) {
    Tensor eps_hat = denoiser_forward(params, x, t, c);
    double a = sched.alpha_at(t);
    double ab = sched.alpha_bar_at(t);
    double coeff = (1.0 - a) / std::sqrt(1.0 - ab);
    double inv_sqrt_a = 1.0 / std::sqrt(a);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = inv_sqrt_a * (x[i] - coeff * eps_hat[i]);
    if (t > 1) {
      double sigma = sched.sigma_at(t);
      for (auto& v : x.data()) v += sigma * rng.gaussian();
    }
  }
  for (auto& v : x.data()) v = std::clamp(v, 0.0, 1.0);
  return x;
}

}  // namespace pap
