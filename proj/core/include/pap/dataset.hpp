#pragma once

#include <cstdint>
#include <vector>

#include "pap/tensor.hpp"

namespace pap {

struct ToyDatasetSpec {
  std::size_t count = 8;
  std::uint64_t image_size = 16;
  std::uint64_t embed_dim = 16;
  std::uint64_t seed = 0;
};

/// Synthetic smooth renders: each image is a clamped sum of Gaussian blobs
/// whose centers/widths/amplitudes come from a per-item attribute vector;
/// the embedding is the attribute vector plus small seeded jitter (std 0.05).
struct ToyDataset {
  ToyDatasetSpec spec;
  std::vector<Tensor> images;      // image_size x image_size, values in [0,1]
  std::vector<Tensor> embeddings;  // embed_dim
  std::vector<Tensor> attributes;  // embed_dim, jitter-free source of each render
};

ToyDataset generate_dataset(const ToyDatasetSpec& spec);

}  // namespace pap
