#pragma once

#include <filesystem>

#include "pap/denoiser.hpp"
#include "pap/schedule.hpp"

namespace pap {

/// Model checkpoint: a directory of PAPT tensor files plus manifest.json
/// (architecture dims, schedule parameters, training seed).
struct Checkpoint {
  DenoiserParams params;
  int schedule_steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::uint64_t training_seed = 0;

  NoiseSchedule schedule() const { return make_schedule(schedule_steps, beta_start, beta_end); }
};

void checkpoint_save(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint checkpoint_load(const std::filesystem::path& dir);

}  // namespace pap
