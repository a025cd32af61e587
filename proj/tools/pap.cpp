// pap: one binary, one subcommand per pipeline stage. Everything a run
// produces lands under --out next to a manifest.json that pins the resolved
// config, its hash, and the seeds, so identical manifests mean identical
// artifacts.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pap/attack.hpp"
#include "pap/bounds.hpp"
#include "pap/checkpoint.hpp"
#include "pap/dataset.hpp"
#include "pap/errors.hpp"
#include "pap/eval.hpp"
#include "pap/png.hpp"
#include "pap/prompt_dist.hpp"
#include "pap/tensor_io.hpp"
#include "pap/train.hpp"
#include "pap/transforms.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("PAP_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ValidationError("PAP_SEED must be an unsigned integer");
    }
  }
  return 0;
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& where) {
  if (!j.is_object()) throw ValidationError("config section '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ValidationError("config: unknown key '" + it.key() + "' in " + where);
    }
  }
}

json load_config_section(const std::string& config_path, const std::string& section,
                         const std::vector<std::string>& known) {
  if (config_path.empty()) return json::object();
  std::ifstream is(config_path);
  if (!is) throw ValidationError("cannot open config file: " + config_path);
  json doc = json::parse(is);
  reject_unknown_keys(doc, {"model", "dataset", "distribution", "attack", "eval", "seeds",
                            "output_dir"},
                      "top level");
  if (!doc.contains(section)) return json::object();
  json sec = doc.at(section);
  reject_unknown_keys(sec, known, section);
  return sec;
}

// CLI flag > config file > built-in default.
template <typename T>
void resolve(T& value, const CLI::Option* opt, const json& config, const char* key) {
  if (opt != nullptr && opt->count() > 0) return;  // explicit flag wins
  if (config.contains(key)) value = config.at(key).get<T>();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc | std::ios::binary);
  if (!os) throw IoError(IoError::Kind::open_failed, "cannot write " + path.string());
  os << text;
}

std::string hash_hex(const json& config) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

void write_manifest(const fs::path& out, const std::string& subcommand, const json& config,
                    std::uint64_t seed, const std::vector<std::string>& artifacts) {
  json manifest{
      {"subcommand", subcommand},
      {"config", config},
      {"config_hash", hash_hex(config)},
      {"seed", seed},
      {"artifacts", artifacts},
  };
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
}

// A PAPT image file may hold a single {H, W} image or a stacked {count, H, W}
// set (as written by train-toy); a stacked set resolves to its first image.
Tensor load_image(const fs::path& path) {
  if (path.extension() == ".png") return png_read_gray(path);
  Tensor t = tensor_read(path);
  if (t.rank() != 3) return t;
  Tensor img({t.shape()[1], t.shape()[2]});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = t[i];
  return img;
}

// A prompt file may hold a single vector or a stacked {count, dim} set (as
// written by train-toy); a stacked set resolves to its first row.
Tensor load_prompt(const fs::path& path) {
  Tensor t = tensor_read(path);
  if (t.rank() != 2) return t;
  Tensor row({t.shape()[1]});
  for (std::size_t i = 0; i < row.size(); ++i) row[i] = t[i];
  return row;
}

std::vector<Tensor> load_image_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    auto ext = entry.path().extension();
    if (ext == ".papt" || ext == ".png") files.push_back(entry.path());
  }
  if (files.empty()) throw ValidationError("no .papt/.png images in " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<Tensor> images;
  for (const auto& f : files) images.push_back(load_image(f));
  return images;
}

Tensor stack(const std::vector<Tensor>& items) {
  std::vector<std::uint64_t> shape{items.size()};
  for (auto d : items.front().shape()) shape.push_back(d);
  Tensor out(shape);
  std::size_t per = items.front().size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = 0; j < per; ++j) out[i * per + j] = items[i][j];
  }
  return out;
}

json trace_json(const std::vector<AttackIterRecord>& trace) {
  json losses = json::array();
  json sigmas = json::array();
  for (const auto& rec : trace) {
    losses.push_back(rec.loss);
    sigmas.push_back(rec.sigma_sq);
  }
  return {{"loss", losses}, {"sigma_sq", sigmas}};
}

// --------------------------------------------------------------------------
// train-toy

int cmd_train_toy(const std::string& config_path, const CLI::App* app, std::string out_dir,
                  std::uint64_t seed, bool seed_given, std::size_t count,
                  std::uint64_t image_size, std::uint64_t embed_dim, int epochs, double lr,
                  int schedule_steps, double beta_start, double beta_end) {
  json dataset_cfg = load_config_section(config_path, "dataset",
                                         {"count", "image_size", "embed_dim"});
  json model_cfg = load_config_section(config_path, "model",
                                       {"epochs", "lr", "schedule_steps", "beta_start",
                                        "beta_end"});
  json seeds_cfg = load_config_section(config_path, "seeds", {"seed"});
  resolve(count, app->get_option("--count"), dataset_cfg, "count");
  resolve(image_size, app->get_option("--image-size"), dataset_cfg, "image_size");
  resolve(embed_dim, app->get_option("--embed-dim"), dataset_cfg, "embed_dim");
  resolve(epochs, app->get_option("--epochs"), model_cfg, "epochs");
  resolve(lr, app->get_option("--lr"), model_cfg, "lr");
  resolve(schedule_steps, app->get_option("--schedule-steps"), model_cfg, "schedule_steps");
  resolve(beta_start, app->get_option("--beta-start"), model_cfg, "beta_start");
  resolve(beta_end, app->get_option("--beta-end"), model_cfg, "beta_end");
  if (!seed_given) resolve(seed, nullptr, seeds_cfg, "seed");

  if (count == 0 || epochs < 0 || !(lr > 0.0)) {
    throw ValidationError("train-toy: need count > 0, epochs >= 0, lr > 0");
  }
  NoiseSchedule sched = make_schedule(schedule_steps, beta_start, beta_end);

  ToyDataset ds = generate_dataset({count, image_size, embed_dim, seed});
  Rng init_rng = Rng(seed).child("init");
  DenoiserParams init = DenoiserParams::init(image_size, image_size, embed_dim, init_rng);
  Rng train_rng = Rng(seed).child("train-toy");
  TrainResult trained = train_toy(init, ds, sched, epochs, lr, train_rng);

  fs::path out(out_dir);
  fs::create_directories(out);
  Checkpoint ckpt{trained.params, schedule_steps, beta_start, beta_end, seed};
  checkpoint_save(out / "model", ckpt);
  tensor_write(out / "images.papt", stack(ds.images));
  tensor_write(out / "embeddings.papt", stack(ds.embeddings));
  json train_record{{"epoch_loss", trained.epoch_loss}};
  write_text(out / "train.json", train_record.dump(2) + "\n");

  json config{{"dataset", {{"count", count}, {"image_size", image_size},
                           {"embed_dim", embed_dim}}},
              {"model", {{"epochs", epochs}, {"lr", lr}, {"schedule_steps", schedule_steps},
                         {"beta_start", beta_start}, {"beta_end", beta_end}}}};
  write_manifest(out, "train-toy", config, seed,
                 {"model", "images.papt", "embeddings.papt", "train.json"});
  std::cout << "trained " << epochs << " epochs, final loss "
            << (trained.epoch_loss.empty() ? 0.0 : trained.epoch_loss.back()) << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// estimate-dist

int cmd_estimate_dist(const std::string& config_path, const CLI::App* app, std::string out_dir,
                      std::uint64_t seed, bool seed_given, const std::string& model_dir,
                      const std::string& images_path, const std::string& prompt_path,
                      int text_steps, double text_lr, double momentum) {
  json dist_cfg = load_config_section(config_path, "distribution",
                                      {"text_steps", "text_lr", "momentum"});
  json seeds_cfg = load_config_section(config_path, "seeds", {"seed"});
  resolve(text_steps, app->get_option("--text-steps"), dist_cfg, "text_steps");
  resolve(text_lr, app->get_option("--text-lr"), dist_cfg, "text_lr");
  resolve(momentum, app->get_option("--momentum"), dist_cfg, "momentum");
  if (!seed_given) resolve(seed, nullptr, seeds_cfg, "seed");

  Checkpoint ckpt = checkpoint_load(model_dir);
  NoiseSchedule sched = ckpt.schedule();

  Tensor stacked = tensor_read(images_path);
  std::vector<Tensor> x_set;
  if (stacked.rank() == 3) {
    std::size_t per = static_cast<std::size_t>(stacked.shape()[1] * stacked.shape()[2]);
    for (std::uint64_t i = 0; i < stacked.shape()[0]; ++i) {
      Tensor img({stacked.shape()[1], stacked.shape()[2]});
      for (std::size_t j = 0; j < per; ++j) img[j] = stacked[i * per + j];
      x_set.push_back(std::move(img));
    }
  } else {
    x_set.push_back(std::move(stacked));
  }
  Tensor c0 = load_prompt(prompt_path);

  Rng phi_rng = Rng(seed).child("phi");
  PhiResult phi = estimate_mean_phi(ckpt.params, x_set, c0, text_steps, text_lr, momentum, sched,
                                    phi_rng);
  Rng psi_rng = Rng(seed).child("psi");
  Tensor eps = psi_rng.gaussian_tensor(std::vector<std::uint64_t>(x_set.front().shape()));
  int t = static_cast<int>(psi_rng.uniform_int(1, sched.steps));
  json record;
  if (phi.c_hat == c0) {
    record["variance"] = 0.0;
    record["degenerate"] = true;
  } else {
    PsiResult psi = estimate_variance_psi(ckpt.params, x_set.front(), eps, t, c0, phi.c_hat,
                                          sched);
    record["variance"] = psi.variance;
    record["degenerate"] = psi.degenerate;
  }

  fs::path out(out_dir);
  fs::create_directories(out);
  tensor_write(out / "mean.papt", phi.c_hat);
  json trace = json::array();
  for (const auto& it : phi.trace.iterates) trace.push_back(it.loss);
  record["mean"] = "mean.papt";
  record["trace"] = trace;
  record["best_index"] = phi.trace.best_index;
  write_text(out / "distribution.json", record.dump(2) + "\n");

  json config{{"distribution", {{"text_steps", text_steps}, {"text_lr", text_lr},
                                {"momentum", momentum}}},
              {"model", model_dir}};
  write_manifest(out, "estimate-dist", config, seed, {"mean.papt", "distribution.json"});
  std::cout << "variance " << record["variance"] << ", degenerate " << record["degenerate"]
            << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// protect

int cmd_protect(const std::string& config_path, const CLI::App* app, std::string out_dir,
                std::uint64_t seed, bool seed_given, const std::string& model_dir,
                const std::string& image_path, const std::string& prompt_path, std::string mode,
                AttackConfig cfg) {
  json attack_cfg = load_config_section(
      config_path, "attack",
      {"mode", "eta", "alpha", "steps", "text_steps", "text_lr", "momentum", "rounds",
       "surrogate_steps", "surrogate_lr"});
  json seeds_cfg = load_config_section(config_path, "seeds", {"seed"});
  resolve(mode, app->get_option("--mode"), attack_cfg, "mode");
  resolve(cfg.eta, app->get_option("--eta"), attack_cfg, "eta");
  resolve(cfg.alpha, app->get_option("--alpha"), attack_cfg, "alpha");
  resolve(cfg.iters, app->get_option("--steps"), attack_cfg, "steps");
  resolve(cfg.text_steps, app->get_option("--text-steps"), attack_cfg, "text_steps");
  resolve(cfg.text_lr, app->get_option("--text-lr"), attack_cfg, "text_lr");
  resolve(cfg.momentum, app->get_option("--momentum"), attack_cfg, "momentum");
  resolve(cfg.rounds, app->get_option("--rounds"), attack_cfg, "rounds");
  resolve(cfg.surrogate_steps, app->get_option("--surrogate-steps"), attack_cfg,
          "surrogate_steps");
  resolve(cfg.surrogate_lr, app->get_option("--surrogate-lr"), attack_cfg, "surrogate_lr");
  if (!seed_given) resolve(seed, nullptr, seeds_cfg, "seed");

  cfg.mode = attack_mode_from_string(mode);
  cfg.validate();

  Checkpoint ckpt = checkpoint_load(model_dir);
  NoiseSchedule sched = ckpt.schedule();
  Tensor x0 = load_image(image_path);
  Tensor c0 = load_prompt(prompt_path);

  ProtectionResult result;
  switch (cfg.mode) {
    case AttackMode::pap:
      result = pap_protect(ckpt.params, x0, c0, cfg, sched, seed);
      break;
    case AttackMode::prompt_specific:
      result = prompt_specific_protect(ckpt.params, x0, c0, cfg, sched, seed);
      break;
    case AttackMode::tanh_space:
      result = tanh_protect(ckpt.params, x0, c0, cfg, sched, seed);
      break;
    case AttackMode::aspap:
      result = aspap_protect(ckpt.params, x0, c0, cfg, sched, seed).protection;
      break;
  }

  fs::path out(out_dir);
  fs::create_directories(out);
  tensor_write(out / "x_adv.papt", result.x_adv);
  png_write_gray(out / "x_adv.png", result.x_adv);

  json config{{"attack",
               {{"mode", mode},
                {"eta", cfg.eta},
                {"alpha", cfg.alpha},
                {"steps", cfg.iters},
                {"text_steps", cfg.text_steps},
                {"text_lr", cfg.text_lr},
                {"momentum", cfg.momentum},
                {"rounds", cfg.rounds},
                {"surrogate_steps", cfg.surrogate_steps},
                {"surrogate_lr", cfg.surrogate_lr}}},
              {"model", model_dir}};
  json run{{"config", config},
           {"seed", seed},
           {"trace", trace_json(result.trace)},
           {"achieved_linf", result.achieved_linf},
           {"distribution_variance", result.distribution.variance}};
  write_text(out / "run.json", run.dump(2) + "\n");
  write_manifest(out, "protect", config, seed, {"x_adv.papt", "x_adv.png", "run.json"});
  std::cout << "achieved_linf " << result.achieved_linf << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const std::string& config_path, const CLI::App* app, std::string out_dir,
                 std::uint64_t seed, bool seed_given, const std::string& model_dir,
                 const std::string& clean_dir, const std::string& protected_dir,
                 const std::string& protocol_path, const std::string& prompt_path, int seeds) {
  json eval_cfg = load_config_section(config_path, "eval", {"seeds"});
  json seeds_cfg = load_config_section(config_path, "seeds", {"seed"});
  resolve(seeds, app->get_option("--seeds"), eval_cfg, "seeds");
  if (!seed_given) resolve(seed, nullptr, seeds_cfg, "seed");
  if (seeds < 1) throw ValidationError("evaluate: --seeds must be >= 1");

  Checkpoint ckpt = checkpoint_load(model_dir);
  NoiseSchedule sched = ckpt.schedule();
  std::vector<Tensor> clean = load_image_dir(clean_dir);
  std::vector<Tensor> protected_images = load_image_dir(protected_dir);

  Tensor default_c_star = prompt_path.empty() ? Tensor::zeros({ckpt.params.embed_dim})
                                              : load_prompt(prompt_path);
  EvalProtocol protocol;
  protocol.c_star = default_c_star;
  if (!protocol_path.empty()) {
    std::ifstream is(protocol_path);
    if (!is) throw ValidationError("cannot open protocol file: " + protocol_path);
    protocol = EvalProtocol::from_json(json::parse(is), default_c_star);
  }
  protocol.validate(ckpt.params.embed_dim);

  std::vector<ProtectionReport> reports;
  for (int i = 0; i < seeds; ++i) {
    reports.push_back(evaluate_protection(ckpt.params, clean, protected_images, protocol, sched,
                                          seed + static_cast<std::uint64_t>(i)));
  }

  fs::path out(out_dir);
  fs::create_directories(out);
  json all = json::array();
  for (const auto& r : reports) all.push_back(r.to_json());
  write_text(out / "report.json", all.dump(2) + "\n");
  write_text(out / "report.csv", report_csv(reports));

  json config{{"eval", protocol.to_json()}, {"model", model_dir}, {"seeds", seeds}};
  write_manifest(out, "evaluate", config, seed, {"report.json", "report.csv"});
  double gap = 0.0;
  for (const auto& r : reports) gap += r.mean_loss_gap / reports.size();
  std::cout << "mean loss gap " << gap << " over " << seeds << " seeds\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// verify-bounds

int cmd_verify_bounds(std::string out_dir, std::uint64_t seed, std::size_t trials) {
  json reports = json::array();
  auto push = [&reports](const std::string& name, double empirical, double bound, bool pass,
                         std::size_t trials_used, std::uint64_t seed_used) {
    reports.push_back({{"name", name},
                       {"empirical", empirical},
                       {"bound", bound},
                       {"pass", pass},
                       {"trials", trials_used},
                       {"seed", seed_used}});
  };

  auto folded = folded_normal_stats({0.0, 1.0});
  double exact = std::sqrt(2.0 / std::numbers::pi);
  push("folded_normal_zero_mean", folded.mean, exact, std::abs(folded.mean - exact) < 1e-10, 0,
       0);

  for (std::size_t n : {std::size_t{10}, std::size_t{100}, std::size_t{1000}}) {
    BoundReport r = verify_single_sample_bound(1.0, n, 4, LipschitzKind::l1_norm, trials, seed);
    push(r.name, r.empirical, r.bound, r.pass, r.trials, r.seed);
  }

  double dissim = 1.0 - cosine_similarity_lower_bound(51396, 0.05, 12.5);
  push("cosine_dissimilarity_reference", dissim, 0.0909, std::abs(dissim - 0.0909) < 0.002, 0,
       0);

  auto gauss = laplace_probe(make_gaussian_logdensity({0.7}, 2.25), {0.0}, 0.5, 500);
  double worst = 0.0;
  for (double e : gauss.errors) worst = std::max(worst, e);
  push("laplace_gaussian_exact", worst, 1e-8, worst < 1e-8, 0, 0);

  auto skew = laplace_probe(make_skewed_logdensity({0.0}, 1.0, 0.05), {0.2}, 0.5, 2000);
  double slope = log_log_slope(skew.radii, skew.errors);
  push("laplace_cubic_slope", slope, 3.0, std::abs(slope - 3.0) < 0.2, 0, 0);

  // cosine bound surface over (n, l) at a few D values, for plotting
  std::string csv = "n,l,D,lower_bound\n";
  char line[96];
  for (std::size_t n : {std::size_t{10}, std::size_t{100}, std::size_t{1000},
                        std::size_t{10000}}) {
    for (double l : {0.01, 0.02, 0.05, 0.1}) {
      for (double big_d : {5.0, 12.5, 25.0}) {
        double nm1 = static_cast<double>(n - 1);
        if (big_d * big_d < nm1 * l * l) continue;
        std::snprintf(line, sizeof(line), "%zu,%g,%g,%.10g\n", n, l, big_d,
                      cosine_similarity_lower_bound(n, l, big_d));
        csv += line;
      }
    }
  }

  fs::path out(out_dir);
  fs::create_directories(out);
  write_text(out / "bounds.json", reports.dump(2) + "\n");
  write_text(out / "cosine_grid.csv", csv);

  json config{{"trials", trials}};
  write_manifest(out, "verify-bounds", config, seed, {"bounds.json", "cosine_grid.csv"});
  bool all_pass = true;
  for (const auto& r : reports) all_pass &= r.at("pass").get<bool>();
  std::cout << (all_pass ? "all bounds hold" : "BOUND VIOLATION, see bounds.json") << "\n";
  return all_pass ? kExitOk : kExitRuntime;
}

// --------------------------------------------------------------------------
// sample

int cmd_sample(std::string out_dir, std::uint64_t seed, const std::string& model_dir,
               const std::string& prompt_path, int count) {
  if (count < 1) throw ValidationError("sample: --count must be >= 1");
  Checkpoint ckpt = checkpoint_load(model_dir);
  NoiseSchedule sched = ckpt.schedule();
  Tensor c = load_prompt(prompt_path);

  fs::path out(out_dir);
  fs::create_directories(out);
  std::vector<std::string> artifacts;
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng(seed).child("sample").child(static_cast<std::uint64_t>(i));
    Tensor x = ddpm_sample(ckpt.params, sched, c, rng);
    std::string stem = "sample_" + std::to_string(i);
    tensor_write(out / (stem + ".papt"), x);
    png_write_gray(out / (stem + ".png"), x);
    artifacts.push_back(stem + ".papt");
    artifacts.push_back(stem + ".png");
  }
  json config{{"count", count}, {"model", model_dir}};
  write_manifest(out, "sample", config, seed, artifacts);
  std::cout << "wrote " << count << " samples\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// plot

int cmd_plot(std::string out_dir, const std::string& report_path) {
  std::ifstream is(report_path);
  if (!is) throw ValidationError("cannot open report: " + report_path);
  json reports = json::parse(is);
  if (!reports.is_array() || reports.empty()) {
    throw ValidationError("plot: report.json must be a non-empty array");
  }

  // one line per seed: loss gap against category count
  struct Series {
    std::uint64_t seed;
    std::vector<std::pair<double, double>> points;  // (categories, gap)
  };
  std::vector<Series> series;
  double min_y = 0.0, max_y = 0.0, max_x = 1.0;
  for (const auto& rep : reports) {
    Series s;
    s.seed = rep.at("seed").get<std::uint64_t>();
    for (const auto& cell : rep.at("cells")) {
      double x = cell.at("categories").get<double>();
      double y = cell.at("loss_gap").get<double>();
      s.points.emplace_back(x, y);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
      max_x = std::max(max_x, x);
    }
    std::sort(s.points.begin(), s.points.end());
    series.push_back(std::move(s));
  }
  if (max_y == min_y) max_y = min_y + 1.0;

  const double w = 640.0, h = 400.0, margin = 50.0;
  auto sx = [&](double x) { return margin + (w - 2 * margin) * x / max_x; };
  auto sy = [&](double y) { return h - margin - (h - 2 * margin) * (y - min_y) / (max_y - min_y); };

  std::string svg;
  char buf[256];
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "viewBox=\"0 0 640 400\">\n";
  svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", margin,
                h - margin, w - margin, h - margin);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", margin,
                margin, margin, h - margin);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%g\" y=\"%g\" font-size=\"12\">category count</text>\n", w / 2 - 40,
                h - 12.0);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"14\" y=\"%g\" font-size=\"12\" transform=\"rotate(-90 14 %g)\">"
                "loss gap</text>\n",
                h / 2, h / 2);
  svg += buf;

  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::string path = "M";
    for (std::size_t p = 0; p < series[i].points.size(); ++p) {
      std::snprintf(buf, sizeof(buf), "%s%.2f %.2f", p == 0 ? "" : " L",
                    sx(series[i].points[p].first), sy(series[i].points[p].second));
      path += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<path d=\"%s\" fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\"/>\n",
                  path.c_str(), colors[i % 10]);
    svg += buf;
  }
  svg += "</svg>\n";

  fs::path out(out_dir);
  fs::create_directories(out);
  write_text(out / "prompt_variation.svg", svg);
  json config{{"report", report_path}};
  write_manifest(out, "plot", config, 0, {"prompt_variation.svg"});
  std::cout << "wrote prompt_variation.svg\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prompt-agnostic perturbation toolbox"};
  app.require_subcommand(1);

  std::string config_path, out_dir, model_dir, image_path, images_path, prompt_path;
  std::string clean_dir, protected_dir, protocol_path, report_path, mode = "pap";
  std::uint64_t seed = 0;
  std::size_t count = 8, trials = 10000;
  std::uint64_t image_size = 16, embed_dim = 16;
  int epochs = 200, schedule_steps = 100, eval_seeds = 1, sample_count = 4;
  double lr = 1e-3, beta_start = 1e-4, beta_end = 0.02;
  AttackConfig acfg;
  int jobs = 1;

  auto add_common = [&](CLI::App* sub, bool needs_out = true) {
    sub->add_option("--config", config_path, "JSON run config (flags override it)");
    sub->add_option("--seed", seed, "base RNG seed (PAP_SEED overrides the default)");
    sub->add_option("--jobs", jobs, "worker cap (subcommands are single-process)");
    auto* out = sub->add_option("--out", out_dir, "output directory");
    if (needs_out) out->required();
  };

  CLI::App* train = app.add_subcommand("train-toy", "generate the toy dataset and train");
  add_common(train);
  train->add_option("--count", count, "dataset size");
  train->add_option("--image-size", image_size, "square image side");
  train->add_option("--embed-dim", embed_dim, "prompt embedding dimension");
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--lr", lr, "SGD learning rate");
  train->add_option("--schedule-steps", schedule_steps, "diffusion steps T");
  train->add_option("--beta-start", beta_start, "first beta");
  train->add_option("--beta-end", beta_end, "last beta");

  CLI::App* dist = app.add_subcommand("estimate-dist", "fit the prompt distribution (phi/psi)");
  add_common(dist);
  dist->add_option("--model", model_dir, "checkpoint directory")->required();
  dist->add_option("--images", images_path, "PAPT image or stacked image set")->required();
  dist->add_option("--prompt", prompt_path, "PAPT prompt embedding c0")->required();
  dist->add_option("--text-steps", acfg.text_steps, "phi iterations N");
  dist->add_option("--text-lr", acfg.text_lr, "phi step size r");
  dist->add_option("--momentum", acfg.momentum, "phi momentum beta");

  CLI::App* protect = app.add_subcommand("protect", "perturb one image");
  add_common(protect);
  protect->add_option("--model", model_dir, "checkpoint directory")->required();
  protect->add_option("--image", image_path, "input image (PAPT or PNG)")->required();
  protect->add_option("--prompt", prompt_path, "PAPT prompt embedding c0")->required();
  protect->add_option("--mode", mode, "pap | specific | tanh | aspap");
  protect->add_option("--eta", acfg.eta, "L-inf budget");
  protect->add_option("--alpha", acfg.alpha, "per-step size");
  protect->add_option("--steps", acfg.iters, "attack iterations M");
  protect->add_option("--text-steps", acfg.text_steps, "phi iterations N");
  protect->add_option("--text-lr", acfg.text_lr, "phi step size r");
  protect->add_option("--momentum", acfg.momentum, "phi momentum beta");
  protect->add_option("--rounds", acfg.rounds, "aspap rounds K");
  protect->add_option("--surrogate-steps", acfg.surrogate_steps, "aspap SGD steps per round");
  protect->add_option("--surrogate-lr", acfg.surrogate_lr, "aspap surrogate learning rate");

  CLI::App* evaluate = app.add_subcommand("evaluate", "fine-tune protocol on held-out prompts");
  add_common(evaluate);
  evaluate->add_option("--model", model_dir, "checkpoint directory")->required();
  evaluate->add_option("--clean", clean_dir, "directory of clean images")->required();
  evaluate->add_option("--protected", protected_dir, "directory of protected images")
      ->required();
  evaluate->add_option("--protocol", protocol_path, "protocol JSON file");
  evaluate->add_option("--prompt", prompt_path, "PAPT c_star (default zeros)");
  evaluate->add_option("--seeds", eval_seeds, "number of evaluation seeds");

  CLI::App* bounds = app.add_subcommand("verify-bounds", "run the numerical bound suite");
  add_common(bounds);
  bounds->add_option("--trials", trials, "Monte Carlo trials per bound");

  CLI::App* sample = app.add_subcommand("sample", "draw DDPM samples");
  add_common(sample);
  sample->add_option("--model", model_dir, "checkpoint directory")->required();
  sample->add_option("--prompt", prompt_path, "PAPT prompt embedding")->required();
  sample->add_option("--count", sample_count, "number of samples");

  CLI::App* plot = app.add_subcommand("plot", "render the prompt-variation grid to SVG");
  add_common(plot);
  plot->add_option("--report", report_path, "report.json from evaluate")->required();

  try {
    seed = default_seed();
    app.parse(argc, argv);
    bool seed_given = false;
    for (CLI::App* sub : {train, dist, protect, evaluate, bounds, sample, plot}) {
      if (sub->parsed() && sub->get_option("--seed")->count() > 0) seed_given = true;
    }

    if (train->parsed()) {
      return cmd_train_toy(config_path, train, out_dir, seed, seed_given, count, image_size,
                           embed_dim, epochs, lr, schedule_steps, beta_start, beta_end);
    }
    if (dist->parsed()) {
      return cmd_estimate_dist(config_path, dist, out_dir, seed, seed_given, model_dir,
                               images_path, prompt_path, acfg.text_steps, acfg.text_lr,
                               acfg.momentum);
    }
    if (protect->parsed()) {
      return cmd_protect(config_path, protect, out_dir, seed, seed_given, model_dir, image_path,
                         prompt_path, mode, acfg);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(config_path, evaluate, out_dir, seed, seed_given, model_dir, clean_dir,
                          protected_dir, protocol_path, prompt_path, eval_seeds);
    }
    if (bounds->parsed()) return cmd_verify_bounds(out_dir, seed, trials);
    if (sample->parsed()) return cmd_sample(out_dir, seed, model_dir, prompt_path, sample_count);
    if (plot->parsed()) return cmd_plot(out_dir, report_path);
    return kExitValidation;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
