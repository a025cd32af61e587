#pragma once

#include <filesystem>

#include "pap/tensor.hpp"

namespace pap {

/// Writes an 8-bit grayscale PNG; values are quantized from [0,1] with
/// rounding to nearest.
void png_write_gray(const std::filesystem::path& path, const Tensor& image);

/// Reads an 8-bit grayscale non-interlaced PNG back into [0,1] values.
Tensor png_read_gray(const std::filesystem::path& path);

/// Quantization used for PNG export: round(v * 255) / 255 on clamped input.
Tensor quantize_8bit(const Tensor& image);

}  // namespace pap
