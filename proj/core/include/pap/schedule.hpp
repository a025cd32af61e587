#pragma once

#include <vector>

namespace pap {

/// DDPM noise schedule. Index t runs 1..T; vectors are stored 0-based with
/// entry t-1 for step t. sigma_t = sqrt(beta_t).
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;

  double alpha_at(int t) const { return alpha[static_cast<std::size_t>(t - 1)]; }
  double alpha_bar_at(int t) const { return alpha_bar[static_cast<std::size_t>(t - 1)]; }
  double sigma_at(int t) const { return sigma[static_cast<std::size_t>(t - 1)]; }
};

/// Linear beta schedule: beta_t spaced linearly in [beta_start, beta_end],
/// alpha_t = 1 - beta_t.
NoiseSchedule make_schedule(int steps, double beta_start = 1e-4, double beta_end = 0.02);

}  // namespace pap
