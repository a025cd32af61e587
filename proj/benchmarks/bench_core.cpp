#include <benchmark/benchmark.h>

#include "pap/attack.hpp"
#include "pap/dataset.hpp"
#include "pap/denoiser.hpp"
#include "pap/rng.hpp"
#include "pap/train.hpp"

using namespace pap;

namespace {

struct Setup {
  DenoiserParams params;
  NoiseSchedule sched = make_schedule(100);
  Tensor x0, c, eps;

  Setup() {
    Rng rng(1);
    params = DenoiserParams::init(16, 16, 16, rng);
    x0 = Tensor::full({16, 16}, 0.5);
    c = rng.gaussian_tensor({16});
    eps = rng.gaussian_tensor({16, 16});
  }
};

Setup& setup() {
  static Setup s;
  return s;
}

void bm_gaussian_tensor(benchmark::State& state) {
  Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rng.gaussian_tensor({16, 16}));
  }
}

void bm_diffusion_loss(benchmark::State& state) {
  Setup& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(diffusion_loss(s.params, s.x0, s.eps, 50, s.c, s.sched));
  }
}

void bm_loss_grad_full(benchmark::State& state) {
  Setup& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_grad(s.params, s.x0, s.eps, 50, s.c, s.sched, true));
  }
}

void bm_loss_grad_inputs_only(benchmark::State& state) {
  Setup& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_grad(s.params, s.x0, s.eps, 50, s.c, s.sched, false));
  }
}

void bm_pgd_step(benchmark::State& state) {
  Setup& s = setup();
  Tensor g = Rng(3).gaussian_tensor({16, 16});
  for (auto _ : state) {
    benchmark::DoNotOptimize(pgd_step(s.x0, g, 1.0 / 255.0, s.x0, 0.05));
  }
}

void bm_pap_protect(benchmark::State& state) {
  Setup& s = setup();
  AttackConfig cfg;
  cfg.iters = static_cast<int>(state.range(0));
  cfg.text_steps = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pap_protect(s.params, s.x0, s.c, cfg, s.sched, 7));
  }
}

void bm_ddpm_sample(benchmark::State& state) {
  Setup& s = setup();
  for (auto _ : state) {
    Rng rng(4);
    benchmark::DoNotOptimize(ddpm_sample(s.params, s.sched, s.c, rng));
  }
}

}  // namespace

BENCHMARK(bm_gaussian_tensor);
BENCHMARK(bm_diffusion_loss);
BENCHMARK(bm_loss_grad_full);
BENCHMARK(bm_loss_grad_inputs_only);
BENCHMARK(bm_pgd_step);
BENCHMARK(bm_pap_protect)->Arg(10)->Arg(50);
BENCHMARK(bm_ddpm_sample);

BENCHMARK_MAIN();
