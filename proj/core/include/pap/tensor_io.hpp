#pragma once

#include <filesystem>

#include "pap/tensor.hpp"

namespace pap {

/// PAPT v1 container: magic "PAPT", LE u32 version=1, u32 dtype code
/// (0=f32, 1=f64), u32 rank, rank x u64 extents, then the row-major payload
/// of raw little-endian values. No padding, no compression.
void tensor_write(const std::filesystem::path& path, const Tensor& t);
Tensor tensor_read(const std::filesystem::path& path);

}  // namespace pap
