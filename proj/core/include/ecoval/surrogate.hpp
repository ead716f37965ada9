#pragma once

#include <span>
#include <vector>

#include "ecoval/dataset.hpp"

namespace ecoval {

// k-NN regressor over embeddings: the prediction is the mean target of the k
// nearest sample points (Euclidean; distance ties go to the earlier sample).
class SurrogateModel {
 public:
  // Samples are the rows `sample` of `embeddings`. Throws kInvalidArgument
  // when k is 0 or exceeds the sample size.
  SurrogateModel(const Matrix& embeddings, std::span<const Index> sample,
                 std::span<const double> targets, std::size_t k);

  double predict(const Eigen::Ref<const Vector>& x) const;

  std::size_t k() const { return k_; }
  std::size_t size() const { return targets_.size(); }
  const Matrix& sample_points() const { return points_; }
  const std::vector<double>& targets() const { return targets_; }

 private:
  Matrix points_;
  std::vector<double> targets_;
  std::size_t k_;
};

}  // namespace ecoval
