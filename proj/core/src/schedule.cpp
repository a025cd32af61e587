#include "pap/schedule.hpp"

#include <cmath>

#include "pap/errors.hpp"

namespace pap {

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw ValidationError("make_schedule: steps must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw ValidationError("make_schedule: need 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.alpha.resize(static_cast<std::size_t>(steps));
  s.alpha_bar.resize(static_cast<std::size_t>(steps));
  s.sigma.resize(static_cast<std::size_t>(steps));
  double running = 1.0;
  for (int t = 0; t < steps; ++t) {
    double beta = steps == 1 ? beta_start
                             : beta_start + (beta_end - beta_start) * t / static_cast<double>(steps - 1);
    double a = 1.0 - beta;
    running *= a;
    s.alpha[static_cast<std::size_t>(t)] = a;
    s.alpha_bar[static_cast<std::size_t>(t)] = running;
    s.sigma[static_cast<std::size_t>(t)] = std::sqrt(beta);
  }
  return s;
}

}  // namespace pap
