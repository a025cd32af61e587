#include "pap/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "pap/errors.hpp"

namespace pap {

namespace {

std::size_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (i < 0) return static_cast<std::size_t>(-i - 1);
  if (i >= n) return static_cast<std::size_t>(2 * n - 1 - i);
  return static_cast<std::size_t>(i);
}

std::vector<double> gaussian_kernel(int k) {
  double sigma = static_cast<double>(k) / 6.0;
  std::vector<double> kernel(static_cast<std::size_t>(k));
  int center = k / 2;
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    double d = static_cast<double>(i - center);
    kernel[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += kernel[static_cast<std::size_t>(i)];
  }
  for (auto& v : kernel) v /= sum;
  return kernel;
}

}  // namespace

TransformSpec TransformSpec::gaussian_blur(int kernel_size) {
  if (kernel_size < 3 || kernel_size % 2 == 0) {
    throw ValidationError("gaussian_blur: kernel size must be odd and >= 3");
  }
  TransformSpec s;
  s.kind = Kind::gaussian_blur;
  s.kernel_size = kernel_size;
  return s;
}

TransformSpec TransformSpec::from_string(const std::string& s) {
  if (s == "identity") return identity();
  if (s.rfind("blur", 0) == 0 && s.size() > 4) {
    return gaussian_blur(std::stoi(s.substr(4)));
  }
  throw ValidationError("unknown transform spec: " + s + " (expected identity or blur<k>)");
}

std::string TransformSpec::to_string() const {
  if (kind == Kind::identity) return "identity";
  return "blur" + std::to_string(kernel_size);
}

Tensor apply_transform(const Tensor& image, const TransformSpec& spec) {
  if (spec.kind == TransformSpec::Kind::identity) return image;
  if (image.rank() != 2) throw ValidationError("apply_transform: expected a 2-D image");
  if (spec.kernel_size < 3 || spec.kernel_size % 2 == 0) {
    throw ValidationError("apply_transform: kernel size must be odd and >= 3");
  }

  auto kernel = gaussian_kernel(spec.kernel_size);
  int half = spec.kernel_size / 2;
  std::ptrdiff_t h = static_cast<std::ptrdiff_t>(image.shape()[0]);
  std::ptrdiff_t w = static_cast<std::ptrdiff_t>(image.shape()[1]);

  Tensor rows = image;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) {
        acc += kernel[static_cast<std::size_t>(k + half)] *
               image.at2(static_cast<std::size_t>(y), reflect_index(x + k, w));
      }
      rows.at2(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = acc;
    }
  }
  Tensor out = rows;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) {
        acc += kernel[static_cast<std::size_t>(k + half)] *
               rows.at2(reflect_index(y + k, h), static_cast<std::size_t>(x));
      }
      out.at2(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
          std::clamp(acc, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace pap
