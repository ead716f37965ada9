#include "ecoval/gmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "ecoval/error.hpp"

namespace ecoval {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::size_t nearest_center(const Matrix& means, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                           double* sq_dist) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    const double d = (means.row(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  if (sq_dist) *sq_dist = best_d;
  return best;
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

struct Parameters {
  std::vector<double> weights;
  Matrix means;
  std::vector<Eigen::MatrixXd> covariances;
};

// M-step from a responsibility matrix (n x k).
Parameters maximize(const Matrix& points, const Eigen::MatrixXd& resp, const ClusterConfig& config) {
  const auto n = points.rows();
  const auto k = resp.cols();
  Parameters p;
  const Eigen::VectorXd nk =
      resp.colwise().sum().transpose().array() + 10.0 * std::numeric_limits<double>::epsilon();
  p.weights.resize(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) p.weights[static_cast<std::size_t>(c)] = nk(c) / static_cast<double>(n);
  p.means = (resp.transpose() * points).array().colwise() / nk.array();
  p.covariances.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) {
    const Matrix centered = points.rowwise() - p.means.row(c);
    Eigen::MatrixXd cov =
        (centered.transpose() * resp.col(c).asDiagonal() * centered) / nk(c);
    if (config.covariance_type == CovarianceType::kDiag) {
      cov = Eigen::MatrixXd(cov.diagonal().asDiagonal());
    }
    cov.diagonal().array() += config.reg_covar;
    p.covariances.push_back(std::move(cov));
  }
  double total = 0.0;
  for (double w : p.weights) total += w;
  for (double& w : p.weights) w /= total;
  return p;
}

}  // namespace

void ClusterConfig::validate() const {
  if (n_components < 1) throw Error(ErrorCode::kInvalidArgument, "n_components must be >= 1");
  if (!(tol >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "tol must be >= 0");
  if (!(reg_covar >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "reg_covar must be >= 0");
  if (max_iter < 1) throw Error(ErrorCode::kInvalidArgument, "max_iter must be >= 1");
  if (n_init < 1) throw Error(ErrorCode::kInvalidArgument, "n_init must be >= 1");
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n == 0 || points.cols() == 0) throw Error(ErrorCode::kInvalidArgument, "k-means needs points");
  if (k < 1 || k > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "k = " + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  }
  std::mt19937_64 rng(seed);
  KMeansResult result;
  result.means.resize(static_cast<Eigen::Index>(k), points.cols());

  // k-means++ seeding.
  std::vector<char> chosen(n, 0);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pick = first;
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
      if (total > 0.0) {
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (chosen[i] || d2[i] == 0.0) continue;
          pick = i;
          target -= d2[i];
          if (target < 0.0) break;
        }
      } else {
        // Every remaining point coincides with a centre; take them in order.
        pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
      }
    }
    chosen[pick] = 1;
    result.means.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (points.row(static_cast<Eigen::Index>(i)) -
                        points.row(static_cast<Eigen::Index>(pick))).squaredNorm();
      d2[i] = std::min(d2[i], d);
    }
  }

  auto assign_all = [&](std::vector<std::size_t>& labels) {
    double inertia = 0.0;
    labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      labels[i] = nearest_center(result.means, points.row(static_cast<Eigen::Index>(i)), &d);
      inertia += d;
    }
    return inertia;
  };

  result.inertia_trace.push_back(assign_all(result.labels));
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(result.labels[i])) += points.row(static_cast<Eigen::Index>(i));
      ++counts[result.labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        result.means.row(static_cast<Eigen::Index>(c)) =
            sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
      }
    }
    std::vector<std::size_t> labels;
    result.inertia_trace.push_back(assign_all(labels));
    const bool stable = labels == result.labels;
    result.labels = std::move(labels);
    if (stable) break;
  }
  return result;
}

Matrix kmeans_init(const Matrix& points, std::size_t k, std::uint64_t seed) {
  return kmeans(points, k, seed).means;
}

ClusterModel::ClusterModel(std::vector<double> weights, Matrix means,
                           std::vector<Eigen::MatrixXd> covariances, CovarianceType type)
    : weights_(std::move(weights)), means_(std::move(means)), covariances_(std::move(covariances)), type_(type) {
  const auto k = weights_.size();
  const auto d = means_.cols();
  if (k == 0 || static_cast<std::size_t>(means_.rows()) != k || covariances_.size() != k || d == 0) {
    throw Error(ErrorCode::kShapeMismatch, "component counts of weights, means and covariances differ");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "mixture weights must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "mixture weights must sum to 1");
  }
  for (std::size_t c = 0; c < k; ++c) {
    const auto& cov = covariances_[c];
    if (cov.rows() != d || cov.cols() != d) {
      throw Error(ErrorCode::kShapeMismatch, "covariance " + std::to_string(c) + " is not d x d");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success || !cov.allFinite()) {
      throw Error(ErrorCode::kSingularModel,
                  "covariance of component " + std::to_string(c) + " is not positive definite");
    }
    Eigen::MatrixXd lower = llt.matrixL();
    cholesky_.push_back(lower);
    log_det_.push_back(2.0 * lower.diagonal().array().log().sum());
  }
}

Eigen::VectorXd ClusterModel::log_joint(const Eigen::Ref<const Vector>& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) {
    throw Error(ErrorCode::kShapeMismatch, "point has dimension " + std::to_string(x.size()) +
                                               ", model expects " + std::to_string(dim()));
  }
  const auto k = n_components();
  Eigen::VectorXd out(static_cast<Eigen::Index>(k));
  const double d = static_cast<double>(dim());
  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::VectorXd diff = x - means_.row(static_cast<Eigen::Index>(c)).transpose();
    const Eigen::VectorXd z = cholesky_[c].triangularView<Eigen::Lower>().solve(diff);
    out(static_cast<Eigen::Index>(c)) =
        std::log(weights_[c]) - 0.5 * (d * kLog2Pi + log_det_[c] + z.squaredNorm());
  }
  return out;
}

Eigen::VectorXd ClusterModel::responsibilities(const Eigen::Ref<const Vector>& x) const {
  const Eigen::VectorXd lj = log_joint(x);
  return (lj.array() - log_sum_exp(lj)).exp();
}

Assignment ClusterModel::assign(const Eigen::Ref<const Vector>& x, const std::vector<bool>& mask) const {
  if (!x.allFinite()) throw Error(ErrorCode::kNonFinite, "cannot assign a non-finite point");
  if (!mask.empty() && mask.size() != n_components()) {
    throw Error(ErrorCode::kShapeMismatch, "assignment mask has the wrong length");
  }
  const Eigen::VectorXd lj = log_joint(x);
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < n_components(); ++c) {
    if (!mask.empty() && !mask[c]) continue;
    if (!best || lj(static_cast<Eigen::Index>(c)) > lj(static_cast<Eigen::Index>(*best))) best = c;
  }
  if (!best) throw Error(ErrorCode::kInvalidArgument, "assignment mask excludes every component");
  Assignment a;
  a.cluster = *best;
  a.distance = (x - means_.row(static_cast<Eigen::Index>(*best)).transpose()).norm();
  return a;
}

std::string ClusterModel::to_json() const {
  nlohmann::json j;
  j["covariance_type"] = type_ == CovarianceType::kFull ? "full" : "diag";
  j["seed"] = seed_;
  j["weights"] = weights_;
  auto& means = j["means"] = nlohmann::json::array();
  for (Eigen::Index c = 0; c < means_.rows(); ++c) {
    means.push_back(std::vector<double>(means_.row(c).begin(), means_.row(c).end()));
  }
  auto& covs = j["covariances"] = nlohmann::json::array();
  for (const auto& cov : covariances_) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < cov.rows(); ++r) {
      rows.push_back(std::vector<double>(cov.row(r).begin(), cov.row(r).end()));
    }
    covs.push_back(std::move(rows));
  }
  j["log_likelihood_trace"] = trace_;
  j["converged"] = converged_;
  return j.dump();
}

ClusterModel ClusterModel::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto weights = j.at("weights").get<std::vector<double>>();
    const auto means_rows = j.at("means").get<std::vector<std::vector<double>>>();
    const auto cov_rows = j.at("covariances").get<std::vector<std::vector<std::vector<double>>>>();
    if (means_rows.empty()) throw Error(ErrorCode::kMalformed, "cluster model has no components");
    const auto d = static_cast<Eigen::Index>(means_rows.front().size());
    Matrix means(static_cast<Eigen::Index>(means_rows.size()), d);
    for (std::size_t c = 0; c < means_rows.size(); ++c) {
      if (static_cast<Eigen::Index>(means_rows[c].size()) != d) {
        throw Error(ErrorCode::kMalformed, "ragged means");
      }
      for (Eigen::Index j2 = 0; j2 < d; ++j2) means(static_cast<Eigen::Index>(c), j2) = means_rows[c][static_cast<std::size_t>(j2)];
    }
    std::vector<Eigen::MatrixXd> covs;
    for (const auto& rows : cov_rows) {
      Eigen::MatrixXd cov(d, d);
      if (static_cast<Eigen::Index>(rows.size()) != d) throw Error(ErrorCode::kMalformed, "bad covariance");
      for (Eigen::Index r = 0; r < d; ++r) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != d) {
          throw Error(ErrorCode::kMalformed, "bad covariance");
        }
        for (Eigen::Index c = 0; c < d; ++c) cov(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
      covs.push_back(std::move(cov));
    }
    const auto type = j.at("covariance_type").get<std::string>() == "diag" ? CovarianceType::kDiag
                                                                           : CovarianceType::kFull;
    ClusterModel model(weights, std::move(means), std::move(covs), type);
    model.seed_ = j.value("seed", std::uint64_t{0});
    model.trace_ = j.value("log_likelihood_trace", std::vector<double>{});
    model.converged_ = j.value("converged", false);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformed, std::string("cluster model: ") + e.what());
  }
}

ClusterModel fit_gmm(const Matrix& points, const ClusterConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(points.rows());
  if (n == 0 || points.cols() == 0) throw Error(ErrorCode::kInvalidArgument, "cannot fit an empty point set");
  if (!points.allFinite()) throw Error(ErrorCode::kNonFinite, "points contain non-finite values");
  const std::size_t k = config.n_components;
  if (k > n) {
    throw Error(ErrorCode::kInvalidArgument, "n_components = " + std::to_string(k) +
                                                 " exceeds the " + std::to_string(n) + " points");
  }

  std::optional<ClusterModel> best;
  std::mt19937_64 seeder(config.seed);
  for (std::size_t run = 0; run < config.n_init; ++run) {
    const std::uint64_t run_seed = run == 0 ? config.seed : seeder();
    const auto init = kmeans(points, k, run_seed);
    Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < n; ++i) {
      resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(init.labels[i])) = 1.0;
    }
    auto params = maximize(points, resp, config);
    ClusterModel model(params.weights, params.means, params.covariances, config.covariance_type);

    auto expect = [&](const ClusterModel& m, Eigen::MatrixXd& r) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd lj = m.log_joint(points.row(static_cast<Eigen::Index>(i)).transpose());
        const double norm = log_sum_exp(lj);
        total += norm;
        r.row(static_cast<Eigen::Index>(i)) = (lj.array() - norm).exp().transpose();
      }
      return total / static_cast<double>(n);
    };

    std::vector<double> trace;
    bool converged = false;
    for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
      const double ll = expect(model, resp);
      trace.push_back(ll);
      if (iter > 0 && std::abs(ll - trace[trace.size() - 2]) < config.tol) {
        converged = true;
        break;
      }
      params = maximize(points, resp, config);
      model = ClusterModel(params.weights, params.means, params.covariances, config.covariance_type);
    }
    if (!converged) trace.push_back(expect(model, resp));

    model.assignments_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      resp.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
      model.assignments_[i] = static_cast<std::size_t>(arg);
    }
    model.trace_ = std::move(trace);
    model.converged_ = converged;
    model.seed_ = config.seed;
    if (!best || model.trace_.back() > best->trace_.back()) best = std::move(model);
  }
  return std::move(*best);
}

}  // namespace ecoval
