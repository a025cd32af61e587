#include "pap/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "pap/errors.hpp"
#include "pap/rng.hpp"

namespace pap {

ToyDataset generate_dataset(const ToyDatasetSpec& spec) {
  if (spec.count == 0) throw ValidationError("generate_dataset: count must be > 0");
  if (spec.embed_dim < 4) throw ValidationError("generate_dataset: embed_dim must be >= 4");

  ToyDataset ds;
  ds.spec = spec;
  Rng root(spec.seed);
  Rng attr_rng = root.child("attributes");
  Rng jitter_rng = root.child("embedding-jitter");

  std::size_t hw = static_cast<std::size_t>(spec.image_size);
  std::size_t blobs = spec.embed_dim / 4;

  for (std::size_t i = 0; i < spec.count; ++i) {
    Tensor a({spec.embed_dim});
    for (auto& v : a.data()) v = attr_rng.uniform01();

    Tensor img({spec.image_size, spec.image_size});
    for (std::size_t b = 0; b < blobs; ++b) {
      double cx = a[4 * b + 0] * static_cast<double>(hw - 1);
      double cy = a[4 * b + 1] * static_cast<double>(hw - 1);
      double width = 1.0 + 2.5 * a[4 * b + 2];
      double amp = 0.4 + 0.6 * a[4 * b + 3];
      double inv = 1.0 / (2.0 * width * width);
      for (std::size_t y = 0; y < hw; ++y) {
        for (std::size_t x = 0; x < hw; ++x) {
          double dx = static_cast<double>(x) - cx;
          double dy = static_cast<double>(y) - cy;
          img.at2(y, x) += amp * std::exp(-(dx * dx + dy * dy) * inv);
        }
      }
    }
    for (auto& v : img.data()) v = std::clamp(v, 0.0, 1.0);

    Tensor c = a;
    for (auto& v : c.data()) v += 0.05 * jitter_rng.gaussian();

    ds.attributes.push_back(std::move(a));
    ds.images.push_back(std::move(img));
    ds.embeddings.push_back(std::move(c));
  }
  return ds;
}

}  // namespace pap
