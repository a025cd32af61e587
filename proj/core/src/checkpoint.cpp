#include "pap/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "pap/errors.hpp"
#include "pap/tensor_io.hpp"

namespace pap {

void checkpoint_save(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir);
  ckpt.params.check_shapes();

  nlohmann::json manifest{
      {"format", "pap-checkpoint-v1"},
      {"image_h", ckpt.params.image_h},
      {"image_w", ckpt.params.image_w},
      {"embed_dim", ckpt.params.embed_dim},
      {"hidden_width", DenoiserParams::kHiddenWidth},
      {"time_features", DenoiserParams::kTimeFeatures},
      {"schedule", {{"steps", ckpt.schedule_steps},
                    {"beta_start", ckpt.beta_start},
                    {"beta_end", ckpt.beta_end}}},
      {"training_seed", ckpt.training_seed},
  };
  std::ofstream os(dir / "manifest.json", std::ios::trunc);
  if (!os) throw IoError(IoError::Kind::open_failed, "cannot write manifest: " + dir.string());
  os << manifest.dump(2) << "\n";

  tensor_write(dir / "w1.papt", ckpt.params.w1);
  tensor_write(dir / "b1.papt", ckpt.params.b1);
  tensor_write(dir / "w2.papt", ckpt.params.w2);
  tensor_write(dir / "b2.papt", ckpt.params.b2);
  tensor_write(dir / "w3.papt", ckpt.params.w3);
  tensor_write(dir / "b3.papt", ckpt.params.b3);
}

Checkpoint checkpoint_load(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError(IoError::Kind::open_failed, "cannot read manifest: " + dir.string());
  nlohmann::json manifest = nlohmann::json::parse(is);
  if (manifest.value("format", "") != std::string("pap-checkpoint-v1")) {
    throw IoError(IoError::Kind::bad_magic, "not a pap checkpoint: " + dir.string());
  }

  Checkpoint ckpt;
  ckpt.params.image_h = manifest.at("image_h").get<std::uint64_t>();
  ckpt.params.image_w = manifest.at("image_w").get<std::uint64_t>();
  ckpt.params.embed_dim = manifest.at("embed_dim").get<std::uint64_t>();
  const auto& sched = manifest.at("schedule");
  ckpt.schedule_steps = sched.at("steps").get<int>();
  ckpt.beta_start = sched.at("beta_start").get<double>();
  ckpt.beta_end = sched.at("beta_end").get<double>();
  ckpt.training_seed = manifest.value("training_seed", 0ull);

  ckpt.params.w1 = tensor_read(dir / "w1.papt");
  ckpt.params.b1 = tensor_read(dir / "b1.papt");
  ckpt.params.w2 = tensor_read(dir / "w2.papt");
  ckpt.params.b2 = tensor_read(dir / "b2.papt");
  ckpt.params.w3 = tensor_read(dir / "w3.papt");
  ckpt.params.b3 = tensor_read(dir / "b3.papt");
  ckpt.params.check_shapes();
  return ckpt;
}

}  // namespace pap
