#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "pap/tensor.hpp"

namespace pap {

/// Deterministic splittable PRNG: xoshiro256++ streams seeded via splitmix64,
/// with child streams derived from (seed, label) so unrelated draws never
/// perturb each other. Gaussians come from Box-Muller on this stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Independent stream identified by a stable label.
  Rng child(std::string_view label) const;
  /// Independent stream identified by an index (e.g. per-trial streams).
  Rng child(std::uint64_t index) const;

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform01();

  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal draw (Box-Muller, second draw cached).
  double gaussian();

  std::vector<double> gaussian_vector(std::size_t n);

  /// Tensor of i.i.d. N(0,1) values with the given shape.
  Tensor gaussian_tensor(std::vector<std::uint64_t> shape);

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t state_[4] = {};
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

/// FNV-1a 64-bit hash; also used for stable config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 1469598103934665603ull);

}  // namespace pap
