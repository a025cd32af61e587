#pragma once

#include "pap/dataset.hpp"
#include "pap/denoiser.hpp"
#include "pap/rng.hpp"
#include "pap/schedule.hpp"

namespace pap {

struct TrainResult {
  DenoiserParams params;
  std::vector<double> epoch_loss;  // mean per-item loss per epoch
};

/// Plain SGD on the denoising loss; per item one (t, eps) draw per epoch.
/// Throws TrainingError (with the loss trace) if the loss goes non-finite.
TrainResult train_toy(const DenoiserParams& init, const ToyDataset& dataset,
                      const NoiseSchedule& sched, int epochs, double lr, Rng& rng);

/// One SGD update of the parameters on a single (x0, eps, t, c) draw;
/// shared by training, fine-tuning and the surrogate updates.
double sgd_step(DenoiserParams& params, const Tensor& x0, const Tensor& eps, int t,
                const Tensor& c, const NoiseSchedule& sched, double lr);

/// DDPM ancestral sampler conditioned on c; clamps to [0,1] at the end only.
Tensor ddpm_sample(const DenoiserParams& params, const NoiseSchedule& sched, const Tensor& c,
                   Rng& rng);

}  // namespace pap
