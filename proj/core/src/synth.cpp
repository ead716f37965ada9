#include "ecoval/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "ecoval/error.hpp"

namespace ecoval {

EmbeddingDataset make_blobs(const BlobOptions& options) {
  if (options.m == 0 || options.classes < 2 || options.blobs_per_class == 0 || options.dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "blobs need m >= 1, classes >= 2, dim >= 1");
  }
  if (!(options.label_noise >= 0.0 && options.label_noise <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "label noise must lie in [0, 1]");
  }
  const std::size_t blobs = options.classes * options.blobs_per_class;
  const int width = static_cast<int>(std::to_string(options.m - 1).size());

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, options.spread);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> other_class(1, options.classes - 1);

  Matrix points(static_cast<Eigen::Index>(options.m), static_cast<Eigen::Index>(options.dim));
  std::vector<int> labels(options.m);
  std::vector<std::string> ids(options.m);
  for (std::size_t i = 0; i < options.m; ++i) {
    const std::size_t blob = i % blobs;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(blob) / static_cast<double>(blobs);
    for (std::size_t j = 0; j < options.dim; ++j) {
      double center = 0.0;
      if (j == 0) center = options.radius * std::cos(angle);
      if (j == 1) center = options.radius * std::sin(angle);
      const double x = center + gauss(rng);
      points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(static_cast<float>(x));
    }
    std::size_t label = blob % options.classes;
    if (unit(rng) < options.label_noise) label = (label + other_class(rng)) % options.classes;
    labels[i] = static_cast<int>(label);
    std::string digits = std::to_string(i);
    ids[i] = "p" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < options.classes; ++c) names.push_back("class" + std::to_string(c));
  return EmbeddingDataset(std::move(points), std::move(labels), std::move(ids), std::move(names));
}

}  // namespace ecoval
