#pragma once

#include <cstdint>

#include "ecoval/dataset.hpp"

namespace ecoval {

// Gaussian blobs with label noise: blob b sits on a circle of `radius` in the
// first two coordinates and carries class b mod classes, so neighbouring blobs
// disagree. Coordinates are rounded through float32 so the in-memory dataset
// matches what save_dataset writes.
struct BlobOptions {
  std::size_t m = 200;
  double label_noise = 0.0;
  std::uint64_t seed = 0;
  std::size_t classes = 2;
  std::size_t blobs_per_class = 1;
  std::size_t dim = 2;
  double radius = 10.0;
  double spread = 1.0;
};

EmbeddingDataset make_blobs(const BlobOptions& options);

}  // namespace ecoval
