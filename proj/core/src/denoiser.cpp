#include "pap/denoiser.hpp"

#include <cmath>

#include "pap/errors.hpp"

namespace pap {

namespace {

Tensor gaussian_matrix(std::uint64_t rows, std::uint64_t cols, double std, Rng& rng) {
  Tensor t({rows, cols});
  for (auto& v : t.data()) v = std * rng.gaussian();
  return t;
}

// out = W x + b, W is rows x cols.
void affine(const Tensor& w, std::span<const double> b, std::span<const double> x,
            std::span<double> out) {
  std::size_t rows = w.shape()[0];
  std::size_t cols = w.shape()[1];
  const double* wd = w.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* row = wd + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

// out += W^T g, W is rows x cols, g has rows entries, out has cols entries.
void transpose_accumulate(const Tensor& w, std::span<const double> g, std::span<double> out) {
  std::size_t rows = w.shape()[0];
  std::size_t cols = w.shape()[1];
  const double* wd = w.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double gr = g[r];
    const double* row = wd + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * gr;
  }
}

struct ForwardCache {
  std::vector<double> input;
  std::vector<double> h1;
  std::vector<double> h2;
  std::vector<double> out;
};

ForwardCache run_forward(const DenoiserParams& p, const Tensor& x_t, int t, const Tensor& c) {
  if (x_t.size() != p.output_dim()) throw ValidationError("denoiser: image shape mismatch");
  if (c.size() != p.embed_dim) throw ValidationError("denoiser: embedding dimension mismatch");
  ForwardCache f;
  f.input.reserve(p.input_dim());
  f.input.insert(f.input.end(), x_t.data().begin(), x_t.data().end());
  auto tf = time_features(t);
  f.input.insert(f.input.end(), tf.begin(), tf.end());
  f.input.insert(f.input.end(), c.data().begin(), c.data().end());

  f.h1.resize(DenoiserParams::kHiddenWidth);
  affine(p.w1, p.b1.data(), f.input, f.h1);
  for (auto& v : f.h1) v = std::tanh(v);

  f.h2.resize(DenoiserParams::kHiddenWidth);
  affine(p.w2, p.b2.data(), f.h1, f.h2);
  for (auto& v : f.h2) v = std::tanh(v);

  f.out.resize(p.output_dim());
  affine(p.w3, p.b3.data(), f.h2, f.out);
  return f;
}

}  // namespace

DenoiserParams DenoiserParams::init(std::uint64_t image_h, std::uint64_t image_w,
                                    std::uint64_t embed_dim, Rng& rng) {
  DenoiserParams p = zeros(image_h, image_w, embed_dim);
  std::uint64_t in = p.input_dim();
  p.w1 = gaussian_matrix(kHiddenWidth, in, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  p.w2 = gaussian_matrix(kHiddenWidth, kHiddenWidth, 1.0 / std::sqrt(static_cast<double>(kHiddenWidth)), rng);
  p.w3 = gaussian_matrix(p.output_dim(), kHiddenWidth, 1.0 / std::sqrt(static_cast<double>(kHiddenWidth)), rng);
  return p;
}

DenoiserParams DenoiserParams::zeros(std::uint64_t image_h, std::uint64_t image_w,
                                     std::uint64_t embed_dim) {
  DenoiserParams p;
  p.image_h = image_h;
  p.image_w = image_w;
  p.embed_dim = embed_dim;
  p.w1 = Tensor::zeros({kHiddenWidth, p.input_dim()});
  p.b1 = Tensor::zeros({kHiddenWidth});
  p.w2 = Tensor::zeros({kHiddenWidth, kHiddenWidth});
  p.b2 = Tensor::zeros({kHiddenWidth});
  p.w3 = Tensor::zeros({p.output_dim(), kHiddenWidth});
  p.b3 = Tensor::zeros({p.output_dim()});
  return p;
}

void DenoiserParams::check_shapes() const {
  bool ok = w1.shape() == std::vector<std::uint64_t>{kHiddenWidth, input_dim()} &&
            b1.shape() == std::vector<std::uint64_t>{kHiddenWidth} &&
            w2.shape() == std::vector<std::uint64_t>{kHiddenWidth, kHiddenWidth} &&
            b2.shape() == std::vector<std::uint64_t>{kHiddenWidth} &&
            w3.shape() == std::vector<std::uint64_t>{static_cast<std::uint64_t>(output_dim()), kHiddenWidth} &&
            b3.shape() == std::vector<std::uint64_t>{static_cast<std::uint64_t>(output_dim())};
  if (!ok) throw ValidationError("denoiser params have inconsistent shapes");
  for (const Tensor* t : {&w1, &b1, &w2, &b2, &w3, &b3}) {
    if (!t->all_finite()) throw ValidationError("denoiser params contain non-finite values");
  }
}

std::vector<double> time_features(int t) {
  std::vector<double> f(DenoiserParams::kTimeFeatures);
  for (std::size_t k = 0; k < DenoiserParams::kTimeFeatures / 2; ++k) {
    double freq = std::pow(10000.0, -static_cast<double>(k) / 3.0);
    f[2 * k] = std::sin(t * freq);
    f[2 * k + 1] = std::cos(t * freq);
  }
  return f;
}

Tensor forward_noise(const Tensor& x0, const Tensor& eps, int t, const NoiseSchedule& sched) {
  if (!x0.same_shape(eps)) throw ValidationError("forward_noise: shape mismatch");
  if (t < 1 || t > sched.steps) throw ValidationError("forward_noise: t out of range");
  double ab = sched.alpha_bar_at(t);
  double sa = std::sqrt(ab);
  double sb = std::sqrt(1.0 - ab);
  Tensor xt = x0;
  for (std::size_t i = 0; i < xt.size(); ++i) xt[i] = sa * x0[i] + sb * eps[i];
  return xt;
}

Tensor denoiser_forward(const DenoiserParams& params, const Tensor& x_t, int t, const Tensor& c) {
  ForwardCache f = run_forward(params, x_t, t, c);
  return Tensor(std::vector<std::uint64_t>(x_t.shape()), std::move(f.out));
}

double diffusion_loss(const DenoiserParams& params, const Tensor& x0, const Tensor& eps, int t,
                      const Tensor& c, const NoiseSchedule& sched) {
  Tensor xt = forward_noise(x0, eps, t, sched);
  ForwardCache f = run_forward(params, xt, t, c);
  double loss = 0.0;
  for (std::size_t i = 0; i < f.out.size(); ++i) {
    double d = eps[i] - f.out[i];
    loss += d * d;
  }
  return loss;
}

LossGrads loss_grad(const DenoiserParams& params, const Tensor& x0, const Tensor& eps, int t,
                    const Tensor& c, const NoiseSchedule& sched, bool want_param_grads) {
  Tensor xt = forward_noise(x0, eps, t, sched);
  ForwardCache f = run_forward(params, xt, t, c);

  std::size_t out_dim = f.out.size();
  std::size_t hidden = DenoiserParams::kHiddenWidth;
  std::size_t in_dim = f.input.size();

  LossGrads g;
  for (std::size_t i = 0; i < out_dim; ++i) {
    double d = eps[i] - f.out[i];
    g.loss += d * d;
  }

  // dL/dout = 2 (out - eps)
  std::vector<double> g_out(out_dim);
  for (std::size_t i = 0; i < out_dim; ++i) g_out[i] = 2.0 * (f.out[i] - eps[i]);

  std::vector<double> g_h2(hidden, 0.0);
  transpose_accumulate(params.w3, g_out, g_h2);
  std::vector<double> g_a2(hidden);
  for (std::size_t i = 0; i < hidden; ++i) g_a2[i] = g_h2[i] * (1.0 - f.h2[i] * f.h2[i]);

  std::vector<double> g_h1(hidden, 0.0);
  transpose_accumulate(params.w2, g_a2, g_h1);
  std::vector<double> g_a1(hidden);
  for (std::size_t i = 0; i < hidden; ++i) g_a1[i] = g_h1[i] * (1.0 - f.h1[i] * f.h1[i]);

  std::vector<double> g_in(in_dim, 0.0);
  transpose_accumulate(params.w1, g_a1, g_in);

  // Split the input gradient: [x_t | time features | c]; chain x_t -> x0.
  double sa = std::sqrt(sched.alpha_bar_at(t));
  g.d_x0 = Tensor(std::vector<std::uint64_t>(x0.shape()));
  for (std::size_t i = 0; i < out_dim; ++i) g.d_x0[i] = sa * g_in[i];
  g.d_c = Tensor(std::vector<std::uint64_t>(c.shape()));
  std::size_t c_off = out_dim + DenoiserParams::kTimeFeatures;
  for (std::size_t i = 0; i < c.size(); ++i) g.d_c[i] = g_in[c_off + i];

  if (want_param_grads) {
    g.d_params.w1 = Tensor::zeros({hidden, in_dim});
    g.d_params.b1 = Tensor(std::vector<std::uint64_t>{hidden}, std::vector<double>(g_a1));
    g.d_params.w2 = Tensor::zeros({hidden, hidden});
    g.d_params.b2 = Tensor(std::vector<std::uint64_t>{hidden}, std::vector<double>(g_a2));
    g.d_params.w3 = Tensor::zeros({out_dim, hidden});
    g.d_params.b3 = Tensor(std::vector<std::uint64_t>{out_dim}, std::vector<double>(g_out));
    for (std::size_t r = 0; r < hidden; ++r)
      for (std::size_t cc = 0; cc < in_dim; ++cc) g.d_params.w1.at2(r, cc) = g_a1[r] * f.input[cc];
    for (std::size_t r = 0; r < hidden; ++r)
      for (std::size_t cc = 0; cc < hidden; ++cc) g.d_params.w2.at2(r, cc) = g_a2[r] * f.h1[cc];
    for (std::size_t r = 0; r < out_dim; ++r)
      for (std::size_t cc = 0; cc < hidden; ++cc) g.d_params.w3.at2(r, cc) = g_out[r] * f.h2[cc];
  }
  return g;
}

}  // namespace pap
