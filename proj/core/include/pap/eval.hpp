#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pap/denoiser.hpp"
#include "pap/rng.hpp"
#include "pap/schedule.hpp"
#include "pap/tensor.hpp"
#include "pap/transforms.hpp"

namespace pap {

/// Fine-tuning / held-out prompt protocol. Held-out prompts live at
/// prompt_radius from c_star along per-category directions; grid cells vary
/// (category count x prompts per category) at a constant total.
struct EvalProtocol {
  int finetune_steps = 200;
  double finetune_lr = 1e-3;
  Tensor c_star;
  std::vector<std::pair<int, int>> grid = {{4, 20}, {8, 10}, {10, 8}, {16, 5}, {20, 4}};
  double prompt_radius = 1.0;
  int loss_draws = 4;  // (eps, t) draws averaged per prompt loss
  TransformSpec transform;

  void validate(std::uint64_t embed_dim) const;
  nlohmann::json to_json() const;
  static EvalProtocol from_json(const nlohmann::json& j, const Tensor& default_c_star);
};

/// Single-sample SGD fine-tuning on a fixed pseudo-prompt.
DenoiserParams finetune(const DenoiserParams& params, const std::vector<Tensor>& images,
                        const Tensor& c_star, int steps, double lr, const NoiseSchedule& sched,
                        Rng& rng);

struct EvalCell {
  int categories = 0;
  int per_category = 0;
  double clean_loss_mean = 0.0;
  double protected_loss_mean = 0.0;
  double clean_loss_std = 0.0;
  double protected_loss_std = 0.0;
  double clean_sample_dev = 0.0;      // mean L2 of samples to nearest clean original
  double protected_sample_dev = 0.0;
  double loss_gap() const { return protected_loss_mean - clean_loss_mean; }
};

struct ProtectionReport {
  std::uint64_t seed = 0;
  std::vector<EvalCell> cells;
  double mean_loss_gap = 0.0;
  nlohmann::json to_json() const;
};

/// Fine-tunes one model copy on the clean images and one on the (optionally
/// transformed) protected images, then scores both on held-out prompts:
/// reconstruction loss against the clean originals and sample deviation.
ProtectionReport evaluate_protection(const DenoiserParams& params,
                                     const std::vector<Tensor>& clean_images,
                                     const std::vector<Tensor>& protected_images,
                                     const EvalProtocol& protocol, const NoiseSchedule& sched,
                                     std::uint64_t seed);

/// Held-out prompt for (cell, category, index): c_star + radius * unit dir.
Tensor held_out_prompt(const Tensor& c_star, double radius, std::uint64_t seed,
                       std::size_t cell, std::size_t category, std::size_t index,
                       const Tensor* away_from = nullptr, double min_distance = 0.0);

std::string report_csv(const std::vector<ProtectionReport>& reports);

}  // namespace pap
