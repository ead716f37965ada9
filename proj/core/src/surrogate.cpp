#include "ecoval/surrogate.hpp"

#include <algorithm>
#include <utility>

#include "ecoval/error.hpp"

namespace ecoval {

SurrogateModel::SurrogateModel(const Matrix& embeddings, std::span<const Index> sample,
                               std::span<const double> targets, std::size_t k)
    : targets_(targets.begin(), targets.end()), k_(k) {
  if (sample.size() != targets.size()) {
    throw Error(ErrorCode::kShapeMismatch, "surrogate needs one target per sample point");
  }
  if (k == 0 || k > sample.size()) {
    throw Error(ErrorCode::kInvalidArgument, "surrogate k = " + std::to_string(k) +
                                                 " must lie in [1, " + std::to_string(sample.size()) + "]");
  }
  points_.resize(static_cast<Eigen::Index>(sample.size()), embeddings.cols());
  for (std::size_t s = 0; s < sample.size(); ++s) {
    if (sample[s] >= static_cast<std::size_t>(embeddings.rows())) {
      throw Error(ErrorCode::kInvalidArgument, "surrogate sample index out of range");
    }
    points_.row(static_cast<Eigen::Index>(s)) = embeddings.row(static_cast<Eigen::Index>(sample[s]));
  }
}

double SurrogateModel::predict(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != points_.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "surrogate query has the wrong dimension");
  }
  std::vector<std::pair<double, std::size_t>> order(targets_.size());
  for (std::size_t s = 0; s < targets_.size(); ++s) {
    order[s] = {(points_.row(static_cast<Eigen::Index>(s)).transpose() - x).squaredNorm(), s};
  }
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_), order.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < k_; ++j) sum += targets_[order[j].second];
  return sum / static_cast<double>(k_);
}

}  // namespace ecoval
