#pragma once

#include <string>

#include "pap/tensor.hpp"

namespace pap {

struct TransformSpec {
  enum class Kind { identity, gaussian_blur };
  Kind kind = Kind::identity;
  int kernel_size = 3;  // odd, >= 3; blur std is kernel_size / 6

  static TransformSpec identity() { return {}; }
  static TransformSpec gaussian_blur(int kernel_size);
  static TransformSpec from_string(const std::string& s);
  std::string to_string() const;
};

/// Normalized separable Gaussian kernel, reflect-padded convolution.
Tensor apply_transform(const Tensor& image, const TransformSpec& spec);

}  // namespace pap
