#include "pap/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pap/errors.hpp"
#include "pap/train.hpp"

namespace pap {

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Mean reconstruction loss of the model on the reference images at prompt c,
// averaged over a fixed number of seeded (eps, t) draws.
double prompt_loss(const DenoiserParams& model, const std::vector<Tensor>& references,
                   const Tensor& c, int draws, const NoiseSchedule& sched, Rng rng) {
  double acc = 0.0;
  for (int d = 0; d < draws; ++d) {
    int t = static_cast<int>(rng.uniform_int(1, sched.steps));
    Tensor eps = rng.gaussian_tensor(std::vector<std::uint64_t>(references.front().shape()));
    for (const Tensor& x : references) acc += diffusion_loss(model, x, eps, t, c, sched);
  }
  return acc / static_cast<double>(draws * references.size());
}

double nearest_l2(const Tensor& sample, const std::vector<Tensor>& references) {
  double best = std::numeric_limits<double>::infinity();
  for (const Tensor& r : references) best = std::min(best, sample.l2_distance(r));
  return best;
}

}  // namespace

void EvalProtocol::validate(std::uint64_t embed_dim) const {
  if (finetune_steps < 0) throw ValidationError("eval protocol: finetune_steps must be >= 0");
  if (!(finetune_lr > 0.0)) throw ValidationError("eval protocol: finetune_lr must be > 0");
  if (c_star.size() != embed_dim) throw ValidationError("eval protocol: c_star dimension mismatch");
  if (grid.empty()) throw ValidationError("eval protocol: empty prompt grid");
  long total = -1;
  for (auto [cats, per] : grid) {
    if (cats < 1 || per < 1) throw ValidationError("eval protocol: grid counts must be >= 1");
    long cell_total = static_cast<long>(cats) * per;
    if (total < 0) total = cell_total;
    if (cell_total != total) {
      throw ValidationError("eval protocol: grid cells must share a constant prompt total");
    }
  }
  if (!(prompt_radius > 0.0)) throw ValidationError("eval protocol: prompt_radius must be > 0");
  if (loss_draws < 1) throw ValidationError("eval protocol: loss_draws must be >= 1");
}

nlohmann::json EvalProtocol::to_json() const {
  nlohmann::json grid_json = nlohmann::json::array();
  for (auto [cats, per] : grid) grid_json.push_back({cats, per});
  return {
      {"finetune_steps", finetune_steps},
      {"finetune_lr", finetune_lr},
      {"c_star", std::vector<double>(c_star.data().begin(), c_star.data().end())},
      {"grid", grid_json},
      {"prompt_radius", prompt_radius},
      {"loss_draws", loss_draws},
      {"transform", transform.to_string()},
  };
}

EvalProtocol EvalProtocol::from_json(const nlohmann::json& j, const Tensor& default_c_star) {
  static const std::vector<std::string> known = {"finetune_steps", "finetune_lr", "c_star",
                                                "grid", "prompt_radius", "loss_draws",
                                                "transform"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ValidationError("eval protocol: unknown key '" + it.key() + "'");
    }
  }
  EvalProtocol p;
  p.c_star = default_c_star;
  p.finetune_steps = j.value("finetune_steps", p.finetune_steps);
  p.finetune_lr = j.value("finetune_lr", p.finetune_lr);
  if (j.contains("c_star")) p.c_star = Tensor::vector1d(j.at("c_star").get<std::vector<double>>());
  if (j.contains("grid")) {
    p.grid.clear();
    for (const auto& cell : j.at("grid")) {
      p.grid.emplace_back(cell.at(0).get<int>(), cell.at(1).get<int>());
    }
  }
  p.prompt_radius = j.value("prompt_radius", p.prompt_radius);
  p.loss_draws = j.value("loss_draws", p.loss_draws);
  if (j.contains("transform")) p.transform = TransformSpec::from_string(j.at("transform"));
  return p;
}

DenoiserParams finetune(const DenoiserParams& params, const std::vector<Tensor>& images,
                        const Tensor& c_star, int steps, double lr, const NoiseSchedule& sched,
                        Rng& rng) {
  if (steps < 0) throw ValidationError("finetune: steps must be >= 0");
  if (images.empty()) throw ValidationError("finetune: empty image list");
  DenoiserParams out = params;
  for (int s = 0; s < steps; ++s) {
    const Tensor& x = images[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(images.size()) - 1))];
    int t = static_cast<int>(rng.uniform_int(1, sched.steps));
    Tensor eps = rng.gaussian_tensor(std::vector<std::uint64_t>(x.shape()));
    double loss = sgd_step(out, x, eps, t, c_star, sched, lr);
    if (!std::isfinite(loss)) {
      throw TrainingError("finetune: loss diverged at step " + std::to_string(s), {});
    }
  }
  return out;
}

Tensor held_out_prompt(const Tensor& c_star, double radius, std::uint64_t seed,
                       std::size_t cell, std::size_t category, std::size_t index,
                       const Tensor* away_from, double min_distance) {
  for (std::uint64_t salt = 0;; ++salt) {
    Rng dir_rng = Rng(seed).child("held-out-prompts").child(cell).child(category ^ (salt << 32));
    // category direction plus per-prompt jitter, normalized to the radius
    std::vector<double> dir = dir_rng.gaussian_vector(c_star.size());
    Rng jitter_rng = dir_rng.child(index);
    double norm = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      dir[i] += 0.25 * jitter_rng.gaussian();
      norm += dir[i] * dir[i];
    }
    norm = std::sqrt(norm);
    Tensor prompt = c_star;
    for (std::size_t i = 0; i < dir.size(); ++i) prompt[i] += radius * dir[i] / norm;
    if (away_from == nullptr || prompt.l2_distance(*away_from) >= min_distance) return prompt;
    if (salt > 64) throw IterationError("held_out_prompt: cannot satisfy distance constraint");
  }
}

ProtectionReport evaluate_protection(const DenoiserParams& params,
                                     const std::vector<Tensor>& clean_images,
                                     const std::vector<Tensor>& protected_images,
                                     const EvalProtocol& protocol, const NoiseSchedule& sched,
                                     std::uint64_t seed) {
  if (clean_images.size() != protected_images.size() || clean_images.empty()) {
    throw ValidationError("evaluate_protection: clean/protected image lists must match");
  }
  protocol.validate(params.embed_dim);

  std::vector<Tensor> protected_input;
  protected_input.reserve(protected_images.size());
  for (const Tensor& img : protected_images) {
    protected_input.push_back(apply_transform(img, protocol.transform));
  }

  Rng root(seed);
  Rng ft_clean = root.child("finetune");
  Rng ft_prot = root.child("finetune");  // identical stream: same draws for both models
  DenoiserParams model_clean = finetune(params, clean_images, protocol.c_star,
                                        protocol.finetune_steps, protocol.finetune_lr, sched,
                                        ft_clean);
  DenoiserParams model_prot = finetune(params, protected_input, protocol.c_star,
                                       protocol.finetune_steps, protocol.finetune_lr, sched,
                                       ft_prot);

  ProtectionReport report;
  report.seed = seed;
  for (std::size_t cell = 0; cell < protocol.grid.size(); ++cell) {
    auto [cats, per] = protocol.grid[cell];
    EvalCell out;
    out.categories = cats;
    out.per_category = per;
    std::vector<double> clean_losses, prot_losses;
    double clean_dev = 0.0, prot_dev = 0.0;
    for (int k = 0; k < cats; ++k) {
      for (int m = 0; m < per; ++m) {
        Tensor prompt = held_out_prompt(protocol.c_star, protocol.prompt_radius, seed, cell,
                                        static_cast<std::size_t>(k), static_cast<std::size_t>(m));
        Rng loss_rng = root.child("prompt-loss").child(cell).child(
            static_cast<std::uint64_t>(k) * 1000 + static_cast<std::uint64_t>(m));
        clean_losses.push_back(prompt_loss(model_clean, clean_images, prompt,
                                           protocol.loss_draws, sched, loss_rng));
        prot_losses.push_back(prompt_loss(model_prot, clean_images, prompt, protocol.loss_draws,
                                          sched, loss_rng));
        Rng sample_clean = root.child("samples").child(cell).child(
            static_cast<std::uint64_t>(k) * 1000 + static_cast<std::uint64_t>(m));
        Rng sample_prot = sample_clean;
        clean_dev += nearest_l2(ddpm_sample(model_clean, sched, prompt, sample_clean),
                                clean_images);
        prot_dev += nearest_l2(ddpm_sample(model_prot, sched, prompt, sample_prot), clean_images);
      }
    }
    double count = static_cast<double>(cats * per);
    out.clean_loss_mean = mean_of(clean_losses);
    out.protected_loss_mean = mean_of(prot_losses);
    out.clean_loss_std = std_of(clean_losses, out.clean_loss_mean);
    out.protected_loss_std = std_of(prot_losses, out.protected_loss_mean);
    out.clean_sample_dev = clean_dev / count;
    out.protected_sample_dev = prot_dev / count;
    report.cells.push_back(out);
  }

  double gap_sum = 0.0;
  for (const auto& cell : report.cells) gap_sum += cell.loss_gap();
  report.mean_loss_gap = gap_sum / static_cast<double>(report.cells.size());
  return report;
}

nlohmann::json ProtectionReport::to_json() const {
  nlohmann::json cells_json = nlohmann::json::array();
  for (const auto& c : cells) {
    cells_json.push_back({
        {"categories", c.categories},
        {"per_category", c.per_category},
        {"clean_loss_mean", c.clean_loss_mean},
        {"protected_loss_mean", c.protected_loss_mean},
        {"clean_loss_std", c.clean_loss_std},
        {"protected_loss_std", c.protected_loss_std},
        {"clean_sample_dev", c.clean_sample_dev},
        {"protected_sample_dev", c.protected_sample_dev},
        {"loss_gap", c.loss_gap()},
    });
  }
  return {{"seed", seed}, {"cells", cells_json}, {"mean_loss_gap", mean_loss_gap}};
}

std::string report_csv(const std::vector<ProtectionReport>& reports) {
  std::string csv =
      "seed,categories,per_category,clean_loss_mean,protected_loss_mean,loss_gap,"
      "clean_sample_dev,protected_sample_dev\n";
  char line[256];
  for (const auto& r : reports) {
    for (const auto& c : r.cells) {
      std::snprintf(line, sizeof(line), "%llu,%d,%d,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                    static_cast<unsigned long long>(r.seed), c.categories, c.per_category,
                    c.clean_loss_mean, c.protected_loss_mean, c.loss_gap(), c.clean_sample_dev,
                    c.protected_sample_dev);
      csv += line;
    }
  }
  return csv;
}

}  // namespace pap
