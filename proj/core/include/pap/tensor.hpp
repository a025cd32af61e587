#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace pap {

enum class Dtype : std::uint32_t { f32 = 0, f64 = 1 };

/// Dense row-major real tensor. Values are held as doubles; an f32 tensor
/// holds only float-representable values so file round-trips stay bit-exact.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::uint64_t> shape, Dtype dtype = Dtype::f64);
  Tensor(std::vector<std::uint64_t> shape, std::vector<double> data, Dtype dtype = Dtype::f64);

  static Tensor zeros(std::vector<std::uint64_t> shape, Dtype dtype = Dtype::f64);
  static Tensor full(std::vector<std::uint64_t> shape, double value, Dtype dtype = Dtype::f64);
  static Tensor scalar(double value, Dtype dtype = Dtype::f64);
  static Tensor vector1d(std::vector<double> values, Dtype dtype = Dtype::f64);

  Dtype dtype() const { return dtype_; }
  const std::vector<std::uint64_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  /// Exact equality of dtype, shape and every value.
  bool operator==(const Tensor& other) const;

  double max_abs_diff(const Tensor& other) const;
  double l2_distance(const Tensor& other) const;
  double squared_norm() const;

  /// Snaps every value through float precision (for f32 tensors).
  void quantize_to_dtype();

 private:
  Dtype dtype_ = Dtype::f64;
  std::vector<std::uint64_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_numel(const std::vector<std::uint64_t>& shape);

}  // namespace pap
