#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "pap/dataset.hpp"
#include "pap/errors.hpp"
#include "pap/eval.hpp"
#include "pap/png.hpp"
#include "pap/stats.hpp"
#include "pap/train.hpp"
#include "pap/transforms.hpp"

using namespace pap;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "pap-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

struct Toy {
  DenoiserParams params;
  NoiseSchedule sched;
  ToyDataset ds;
};

Toy trained_toy() {
  Toy t;
  t.ds = generate_dataset({6, 8, 8, 91});
  t.sched = make_schedule(50);
  for (auto& e : t.ds.embeddings) {
    e = Tensor({8}, std::vector<double>(e.data().begin(), e.data().begin() + 8));
  }
  Rng rng(92);
  DenoiserParams init = DenoiserParams::init(8, 8, 8, rng);
  Rng train_rng(93);
  t.params = train_toy(init, t.ds, t.sched, 120, 1e-3, train_rng).params;
  return t;
}

EvalProtocol small_protocol(const Tensor& c_star) {
  EvalProtocol p;
  p.c_star = c_star;
  p.finetune_steps = 30;
  p.grid = {{2, 2}, {4, 1}};
  p.loss_draws = 2;
  return p;
}

}  // namespace

TEST_CASE("quantize_8bit: rounding and idempotence") {
  Tensor img = Tensor::vector1d({0.0, 1.0, 0.5, 1.0 / 255.0, 0.4999 / 255.0});
  Tensor q = quantize_8bit(img);
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 1.0);
  CHECK(q[2] == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
  CHECK(q[3] == doctest::Approx(1.0 / 255.0).epsilon(1e-12));
  CHECK(q[4] == 0.0);
  CHECK(quantize_8bit(q) == q);
}

TEST_CASE("png: write/read round-trips at 8-bit precision") {
  Rng rng(1);
  Tensor img({8, 8});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform01();
  auto path = temp_file("roundtrip.png");
  png_write_gray(path, img);
  Tensor back = png_read_gray(path);
  CHECK(back.shape() == img.shape());
  CHECK(back == quantize_8bit(img));
}

TEST_CASE("png: constant extremes survive") {
  for (double v : {0.0, 1.0}) {
    Tensor img = Tensor::full({4, 7}, v);
    auto path = temp_file("const.png");
    png_write_gray(path, img);
    Tensor back = png_read_gray(path);
    CHECK(back == img);
  }
}

TEST_CASE("png: deterministic byte output for identical input") {
  Tensor img = Tensor::full({5, 5}, 0.25);
  auto a = temp_file("det_a.png"), b = temp_file("det_b.png");
  png_write_gray(a, img);
  png_write_gray(b, img);
  CHECK(std::filesystem::file_size(a) == std::filesystem::file_size(b));
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("png: missing file is an IoError") {
  CHECK_THROWS_AS(png_read_gray(temp_file("no-such-file.png")), IoError);
}

TEST_CASE("transforms: identity is exact; parser round-trips") {
  Tensor img = Tensor::full({6, 6}, 0.3);
  img[7] = 0.9;
  CHECK(apply_transform(img, TransformSpec::identity()) == img);
  CHECK(TransformSpec::from_string("identity").kind == TransformSpec::Kind::identity);
  auto blur = TransformSpec::from_string("blur5");
  CHECK(blur.kind == TransformSpec::Kind::gaussian_blur);
  CHECK(blur.kernel_size == 5);
  CHECK(blur.to_string() == "blur5");
  CHECK_THROWS_AS(TransformSpec::from_string("blur4"), ValidationError);  // even kernel
  CHECK_THROWS_AS(TransformSpec::from_string("sharpen"), ValidationError);
}

TEST_CASE("transforms: blur preserves constant images exactly up to rounding") {
  Tensor img = Tensor::full({8, 8}, 0.37);
  Tensor out = apply_transform(img, TransformSpec::gaussian_blur(5));
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] == doctest::Approx(0.37).epsilon(1e-12));
  }
}

TEST_CASE("transforms: blur reduces total variation of a noisy image") {
  Rng rng(5);
  Tensor img({8, 8});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform01();
  Tensor out = apply_transform(img, TransformSpec::gaussian_blur(5));
  auto tv = [](const Tensor& t) {
    double acc = 0.0;
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t c = 0; c + 1 < 8; ++c) acc += std::abs(t.at2(r, c + 1) - t.at2(r, c));
    return acc;
  };
  CHECK(tv(out) < tv(img));
  for (double v : out.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("eval protocol: validation rules") {
  Tensor c = Tensor::zeros({8});
  EvalProtocol p = small_protocol(c);
  CHECK_NOTHROW(p.validate(8));
  p.grid = {{2, 2}, {3, 2}};  // totals 4 vs 6
  CHECK_THROWS_AS(p.validate(8), ValidationError);
  p = small_protocol(c);
  CHECK_THROWS_AS(p.validate(16), ValidationError);  // c_star dim mismatch
  p = small_protocol(c);
  p.loss_draws = 0;
  CHECK_THROWS_AS(p.validate(8), ValidationError);
}

TEST_CASE("eval protocol: json round-trip and unknown-key rejection") {
  Tensor c = Tensor::vector1d({1.0, 2.0, 3.0});
  EvalProtocol p = small_protocol(c);
  p.transform = TransformSpec::gaussian_blur(3);
  nlohmann::json j = p.to_json();
  EvalProtocol back = EvalProtocol::from_json(j, Tensor::zeros({3}));
  CHECK(back.finetune_steps == p.finetune_steps);
  CHECK(back.c_star == p.c_star);
  CHECK(back.grid == p.grid);
  CHECK(back.transform.to_string() == "blur3");

  j["typo_key"] = 1;
  CHECK_THROWS_AS(EvalProtocol::from_json(j, c), ValidationError);
}

TEST_CASE("held_out_prompt: on-sphere, deterministic, distinct across categories") {
  Tensor c = Tensor::zeros({8});
  Tensor a = held_out_prompt(c, 1.5, 3, 0, 0, 0);
  Tensor a2 = held_out_prompt(c, 1.5, 3, 0, 0, 0);
  Tensor b = held_out_prompt(c, 1.5, 3, 0, 1, 0);
  CHECK(a == a2);
  CHECK(a.l2_distance(c) == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(a.l2_distance(b) > 1e-6);
}

TEST_CASE("held_out_prompt: distance constraint is honored") {
  Tensor c = Tensor::zeros({8});
  Tensor avoid = held_out_prompt(c, 1.0, 4, 0, 0, 0);
  Tensor p = held_out_prompt(c, 1.0, 4, 0, 0, 0, &avoid, 0.5);
  CHECK(p.l2_distance(avoid) >= 0.5);
  CHECK(p.l2_distance(c) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("finetune: zero steps is the identity; training moves parameters") {
  Toy t = trained_toy();
  Rng rng(6);
  DenoiserParams same =
      finetune(t.params, t.ds.images, t.ds.embeddings[0], 0, 1e-3, t.sched, rng);
  CHECK(same.w1 == t.params.w1);
  DenoiserParams moved =
      finetune(t.params, t.ds.images, t.ds.embeddings[0], 10, 1e-3, t.sched, rng);
  CHECK(moved.w1.max_abs_diff(t.params.w1) > 0.0);
}

TEST_CASE("evaluate_protection: protected == clean nullifies every gap") {
  Toy t = trained_toy();
  EvalProtocol p = small_protocol(t.ds.embeddings[0]);
  ProtectionReport r =
      evaluate_protection(t.params, t.ds.images, t.ds.images, p, t.sched, 11);
  CHECK(r.cells.size() == 2);
  for (const auto& cell : r.cells) {
    CHECK(cell.loss_gap() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cell.clean_sample_dev == doctest::Approx(cell.protected_sample_dev).epsilon(1e-12));
  }
  CHECK(r.mean_loss_gap == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("evaluate_protection: deterministic report for a fixed seed") {
  Toy t = trained_toy();
  EvalProtocol p = small_protocol(t.ds.embeddings[0]);
  std::vector<Tensor> protected_images = t.ds.images;
  for (auto& img : protected_images) {
    for (std::size_t i = 0; i < img.size(); ++i) {
      img[i] = std::clamp(img[i] + ((i % 2) ? 0.05 : -0.05), 0.0, 1.0);
    }
  }
  ProtectionReport a =
      evaluate_protection(t.params, t.ds.images, protected_images, p, t.sched, 12);
  ProtectionReport b =
      evaluate_protection(t.params, t.ds.images, protected_images, p, t.sched, 12);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.cells.size() == p.grid.size());

  std::string csv = report_csv({a});
  CHECK(csv.find("seed,categories") == 0);
  // header plus one row per cell
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(a.cells.size()));
}

TEST_CASE("evaluate_protection: mismatched image lists rejected") {
  Toy t = trained_toy();
  EvalProtocol p = small_protocol(t.ds.embeddings[0]);
  std::vector<Tensor> fewer(t.ds.images.begin(), t.ds.images.end() - 1);
  CHECK_THROWS_AS(evaluate_protection(t.params, t.ds.images, fewer, p, t.sched, 1),
                  ValidationError);
}

TEST_CASE("stats: mean, variance, and the paired t-test") {
  std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  CHECK(mean(v) == doctest::Approx(2.5));
  CHECK(sample_variance(v) == doctest::Approx(5.0 / 3.0));

  // strongly separated pairs: significant at 0.01
  std::vector<double> a = {5.1, 5.0, 5.2, 4.9, 5.05, 5.1, 4.95, 5.0, 5.15, 5.05};
  std::vector<double> b = {1.0, 1.1, 0.9, 1.05, 1.0, 0.95, 1.1, 1.0, 0.9, 1.05};
  PairedTest t1 = paired_t_test(a, b, 0.01);
  CHECK(t1.significant);
  CHECK(t1.mean_diff > 3.9);

  // identical inputs: never significant
  PairedTest t2 = paired_t_test(a, a, 0.05);
  CHECK(!t2.significant);
}
