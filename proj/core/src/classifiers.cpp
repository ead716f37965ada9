#include "ecoval/classifiers.hpp"

#include <cmath>

#include "ecoval/error.hpp"

namespace ecoval {

int knn_vote(const Matrix& points, std::span<const int> labels, std::span<const Index> train,
             const Eigen::Ref<const Vector>& query, std::size_t k) {
  return knn_vote_with(train, labels, k, [&](Index i) {
    return (points.row(static_cast<Eigen::Index>(i)).transpose() - query).squaredNorm();
  });
}

LogisticModel LogisticModel::fit(const Matrix& points, std::span<const int> labels,
                                 std::span<const Index> train, std::size_t num_classes,
                                 const LogisticConfig& config) {
  if (!(config.learning_rate > 0.0) || config.epochs == 0 || !(config.l2 >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "logistic config needs lr > 0, epochs >= 1, l2 >= 0");
  }
  const auto n = static_cast<Eigen::Index>(train.size());
  const auto d = points.cols();
  const auto k = static_cast<Eigen::Index>(num_classes);

  LogisticModel model;
  model.weights_ = Eigen::MatrixXd::Zero(k, d);
  model.bias_ = Eigen::VectorXd::Zero(k);
  if (n == 0) return model;

  Eigen::MatrixXd x(n, d);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, k);
  double max_sq_norm = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = static_cast<Eigen::Index>(train[static_cast<std::size_t>(r)]);
    x.row(r) = points.row(row);
    onehot(r, labels[static_cast<std::size_t>(row)]) = 1.0;
    max_sq_norm = std::max(max_sq_norm, x.row(r).squaredNorm() + 1.0);
  }
  // Mean softmax cross-entropy is (max ||[x, 1]||^2 / 2 + l2)-smooth, so a
  // learning rate below 2 on this scale makes every step a descent step.
  const double step = config.learning_rate / (0.5 * max_sq_norm + config.l2);

  auto loss_and_probs = [&](Eigen::MatrixXd& probs) {
    probs = x * model.weights_.transpose();
    probs.rowwise() += model.bias_.transpose();
    double loss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double top = probs.row(r).maxCoeff();
      probs.row(r) = (probs.row(r).array() - top).exp();
      const double z = probs.row(r).sum();
      probs.row(r) /= z;
      Eigen::Index y = 0;
      onehot.row(r).maxCoeff(&y);
      loss -= std::log(std::max(probs(r, y), 1e-300));
    }
    return loss / static_cast<double>(n) + 0.5 * config.l2 * model.weights_.squaredNorm();
  };

  Eigen::MatrixXd probs;
  model.loss_trace_.reserve(config.epochs + 1);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    model.loss_trace_.push_back(loss_and_probs(probs));
    const Eigen::MatrixXd residual = probs - onehot;
    const Eigen::MatrixXd grad_w =
        residual.transpose() * x / static_cast<double>(n) + config.l2 * model.weights_;
    const Eigen::VectorXd grad_b = residual.colwise().sum().transpose() / static_cast<double>(n);
    model.weights_ -= step * grad_w;
    model.bias_ -= step * grad_b;
  }
  model.loss_trace_.push_back(loss_and_probs(probs));
  return model;
}

int LogisticModel::predict(const Eigen::Ref<const Vector>& x) const {
  const Eigen::VectorXd scores = weights_ * x + bias_;
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c) {
    if (scores(c) > scores(best)) best = c;
  }
  return static_cast<int>(best);
}

}  // namespace ecoval
