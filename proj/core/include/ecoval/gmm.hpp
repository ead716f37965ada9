#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ecoval/dataset.hpp"

namespace ecoval {

enum class CovarianceType { kFull, kDiag };

// Defaults follow scikit-learn's GaussianMixture with 30 components.
struct ClusterConfig {
  std::size_t n_components = 30;
  CovarianceType covariance_type = CovarianceType::kFull;
  double tol = 1e-3;
  double reg_covar = 1e-6;
  std::size_t max_iter = 100;
  std::size_t n_init = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct KMeansResult {
  Matrix means;  // k x d
  std::vector<std::size_t> labels;
  std::vector<double> inertia_trace;  // after seeding, then after every Lloyd step
};

// k-means++ seeding followed by Lloyd iterations until the assignment is
// stable or `max_iter` steps have run. Ties go to the lowest centre index;
// a centre that loses all its points keeps its previous position.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 50);
Matrix kmeans_init(const Matrix& points, std::size_t k, std::uint64_t seed);

struct Assignment {
  std::size_t cluster = 0;
  double distance = 0.0;  // Euclidean distance to the component mean
};

class ClusterModel {
 public:
  // Validates the simplex weights and factorises every covariance; a
  // covariance that is not positive definite raises kSingularModel.
  ClusterModel(std::vector<double> weights, Matrix means, std::vector<Eigen::MatrixXd> covariances,
               CovarianceType type);

  std::size_t n_components() const { return weights_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(means_.cols()); }
  CovarianceType covariance_type() const { return type_; }
  const std::vector<double>& weights() const { return weights_; }
  const Matrix& means() const { return means_; }
  const std::vector<Eigen::MatrixXd>& covariances() const { return covariances_; }

  // Populated by fit_gmm.
  const std::vector<std::size_t>& assignments() const { return assignments_; }
  const std::vector<double>& log_likelihood_trace() const { return trace_; }
  bool converged() const { return converged_; }
  std::uint64_t seed() const { return seed_; }

  // log(weight_c) + log N(x | mean_c, cov_c) for every component.
  Eigen::VectorXd log_joint(const Eigen::Ref<const Vector>& x) const;
  Eigen::VectorXd responsibilities(const Eigen::Ref<const Vector>& x) const;

  // Highest posterior among the components allowed by `mask` (all when
  // empty); ties go to the lowest index.
  Assignment assign(const Eigen::Ref<const Vector>& x, const std::vector<bool>& mask = {}) const;

  std::string to_json() const;
  static ClusterModel from_json(std::string_view text);

 private:
  friend ClusterModel fit_gmm(const Matrix& points, const ClusterConfig& config);

  std::vector<double> weights_;
  Matrix means_;
  std::vector<Eigen::MatrixXd> covariances_;
  std::vector<Eigen::MatrixXd> cholesky_;  // lower factors
  std::vector<double> log_det_;
  CovarianceType type_;

  std::vector<std::size_t> assignments_;
  std::vector<double> trace_;
  bool converged_ = false;
  std::uint64_t seed_ = 0;
};

// EM from a k-means start. The trace holds the mean per-point log-likelihood
// observed at every E-step; hard assignments are the argmax responsibility
// under the final parameters.
ClusterModel fit_gmm(const Matrix& points, const ClusterConfig& config);

}  // namespace ecoval
