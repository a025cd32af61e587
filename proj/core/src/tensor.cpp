#include "pap/tensor.hpp"

#include <cmath>

#include "pap/errors.hpp"

namespace pap {

std::size_t shape_numel(const std::vector<std::uint64_t>& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= static_cast<std::size_t>(e);
  return n;
}

Tensor::Tensor(std::vector<std::uint64_t> shape, Dtype dtype)
    : dtype_(dtype), shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::uint64_t> shape, std::vector<double> data, Dtype dtype)
    : dtype_(dtype), shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    throw ValidationError("tensor data length does not match shape");
  }
  if (dtype_ == Dtype::f32) quantize_to_dtype();
}

Tensor Tensor::zeros(std::vector<std::uint64_t> shape, Dtype dtype) {
  return Tensor(std::move(shape), dtype);
}

Tensor Tensor::full(std::vector<std::uint64_t> shape, double value, Dtype dtype) {
  Tensor t(std::move(shape), dtype);
  for (auto& v : t.data_) v = value;
  if (dtype == Dtype::f32) t.quantize_to_dtype();
  return t;
}

Tensor Tensor::scalar(double value, Dtype dtype) {
  return Tensor({}, std::vector<double>{value}, dtype);
}

Tensor Tensor::vector1d(std::vector<double> values, Dtype dtype) {
  std::uint64_t n = values.size();
  return Tensor({n}, std::move(values), dtype);
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Tensor::operator==(const Tensor& other) const {
  return dtype_ == other.dtype_ && shape_ == other.shape_ && data_ == other.data_;
}

double Tensor::max_abs_diff(const Tensor& other) const {
  double m = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    m = std::max(m, std::abs(data_[i] - other.data_[i]));
  }
  return m;
}

double Tensor::l2_distance(const Tensor& other) const {
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    double d = data_[i] - other.data_[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double Tensor::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

void Tensor::quantize_to_dtype() {
  if (dtype_ != Dtype::f32) return;
  for (auto& v : data_) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace pap
