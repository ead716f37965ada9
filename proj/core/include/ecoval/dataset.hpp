#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "ecoval/types.hpp"

namespace ecoval {

// Points are stored one per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// The universe of points: embeddings, class labels and stable string ids.
// Immutable once constructed; construction validates every invariant.
class EmbeddingDataset {
 public:
  EmbeddingDataset(Matrix points, std::vector<int> labels, std::vector<std::string> ids,
                   std::vector<std::string> class_names);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  std::size_t num_classes() const { return class_names_.size(); }

  const Matrix& points() const { return points_; }
  auto point(Index i) const { return points_.row(static_cast<Eigen::Index>(i)); }
  const std::vector<int>& labels() const { return labels_; }
  int label(Index i) const { return labels_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(Index i) const { return ids_[i]; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  // Throws kInvalidArgument when the id is unknown.
  Index index_of(const std::string& id) const;
  bool contains(const std::string& id) const { return by_id_.contains(id); }

 private:
  Matrix points_;
  std::vector<int> labels_;
  std::vector<std::string> ids_;
  std::vector<std::string> class_names_;
  std::unordered_map<std::string, Index> by_id_;
};

// Embedding file: raw little-endian float32, row-major, no header.
// Metadata sidecar: JSON {m, d, classes, labels, ids}.
EmbeddingDataset load_dataset(const std::filesystem::path& embeddings_path,
                              const std::filesystem::path& meta_path);

// Points are narrowed to float32 on disk.
void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& embeddings_path,
                  const std::filesystem::path& meta_path);

struct SplitSpec {
  IndexSet train;
  IndexSet test;
  IndexSet distribution_pool;
  IndexSet oos;

  // Pairwise disjointness and range checks against a dataset of size m.
  void validate(std::size_t m) const;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

// Fractions are (train, test, distribution_pool, oos). Each split is
// stratified by label; every returned index set is sorted ascending.
SplitSpec make_splits(const EmbeddingDataset& ds, const std::array<double, 4>& fractions,
                      std::uint64_t seed);

}  // namespace ecoval
