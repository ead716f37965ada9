#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "ecoval/dataset.hpp"

namespace ecoval {

// k-nearest-neighbour vote over the rows `train` of `points`. Neighbours are
// ordered by (squared distance, row index); a vote tie goes to the tied class
// whose first member appears earliest in that order. Fewer than k rows means
// all of them vote.
int knn_vote(const Matrix& points, std::span<const int> labels, std::span<const Index> train,
             const Eigen::Ref<const Vector>& query, std::size_t k);

struct LogisticConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 100;
  double l2 = 0.0;
};

// Multinomial logistic regression with bias, zero-initialised and trained by
// full-batch gradient descent for a fixed number of epochs.
class LogisticModel {
 public:
  // loss_trace holds the regularised mean cross-entropy before every epoch
  // and after the last one (epochs + 1 entries).
  static LogisticModel fit(const Matrix& points, std::span<const int> labels,
                           std::span<const Index> train, std::size_t num_classes,
                           const LogisticConfig& config);

  // argmax of the scores; ties go to the lowest class.
  int predict(const Eigen::Ref<const Vector>& x) const;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  const std::vector<double>& loss_trace() const { return loss_trace_; }

 private:
  Eigen::MatrixXd weights_;  // classes x d
  Eigen::VectorXd bias_;
  std::vector<double> loss_trace_;
};

}  // namespace ecoval

namespace ecoval {

// Vote core shared by knn_vote and the cached evaluator: `distance(i)` gives
// the (squared) distance from the query to row i.
template <class DistanceFn>
int knn_vote_with(std::span<const Index> train, std::span<const int> labels, std::size_t k,
                  DistanceFn&& distance) {
  if (train.empty()) return -1;
  if (k <= 1) {
    Index best = train.front();
    double best_d = distance(best);
    for (Index i : train.subspan(1)) {
      const double d = distance(i);
      if (d < best_d || (d == best_d && i < best)) {
        best = i;
        best_d = d;
      }
    }
    return labels[best];
  }
  std::vector<std::pair<double, Index>> order;
  order.reserve(train.size());
  for (Index i : train) order.emplace_back(distance(i), i);
  const std::size_t kk = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end());
  int winner = labels[order[0].second];
  std::size_t winner_votes = 0;
  for (std::size_t a = 0; a < kk; ++a) {
    const int label = labels[order[a].second];
    std::size_t votes = 0;
    for (std::size_t b = 0; b < kk; ++b) votes += labels[order[b].second] == label ? 1 : 0;
    if (votes > winner_votes) {
      winner = label;
      winner_votes = votes;
    }
  }
  return winner;
}

}  // namespace ecoval
