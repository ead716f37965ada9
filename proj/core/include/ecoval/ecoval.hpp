#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ecoval/dataset.hpp"
#include "ecoval/gmm.hpp"
#include "ecoval/report.hpp"
#include "ecoval/shapley.hpp"
#include "ecoval/surrogate.hpp"
#include "ecoval/utility.hpp"

namespace ecoval {

// Leave-cluster-out value of one cluster, restricted to the valued set B.
struct ClusterValue {
  std::size_t cluster_id = 0;
  double value = 0.0;  // V_c = U(B) - U(B \ c)
  IndexSet members;  // dataset rows, ascending

  std::size_t size() const { return members.size(); }
};

// Cluster and centroid distance of every point of B, aligned with B.
struct Membership {
  std::vector<std::size_t> cluster;
  std::vector<double> distance;
};

Membership assign_members(const ClusterModel& model, const EmbeddingDataset& ds,
                          std::span<const Index> players);

// One utility call for U(B) and one per non-empty cluster, in cluster order.
// A single non-empty cluster is permitted (V_c = U(B) - U(empty)) but warned about.
std::vector<ClusterValue> lco_values(const SubsetUtility& game, std::span<const Index> players,
                                     const Membership& membership, std::size_t n_clusters,
                                     Warnings* warnings = nullptr);
std::vector<ClusterValue> lco_values(const SubsetUtility& game, const ClusterModel& model,
                                     const EmbeddingDataset& ds, std::span<const Index> players,
                                     Warnings* warnings = nullptr);

// V_c / n_c for each member.
std::vector<double> init_values(const ClusterValue& cluster);

// min(n_s, n_c) members drawn uniformly without replacement from every
// cluster; the result is sorted.
IndexSet curated_subset(std::span<const ClusterValue> clusters, std::size_t per_cluster,
                        std::uint64_t seed);

// (1 + share / share_sum * V_c) / (1 + V_c / n_c). This is the shared shape
// of both adjustment factors; callers handle the degenerate cases.
double normalized_factor(double share, double share_sum, double cluster_value, std::size_t cluster_size);

// Adjustment factors for every member of one cluster. When all shares are
// identical the factors are exactly 1; when the shares sum to (nearly) zero or
// 1 + V_c / n_c vanishes they fall back to 1 and `fell_back` is set.
std::vector<double> cluster_factors(std::span<const double> shares, double cluster_value,
                                    bool* fell_back = nullptr);

// Single-member forms of the two factors, by surrogate value Q and by
// centroid distance d respectively.
double gamma_alpha(double q_i, std::span<const double> q_cluster, double cluster_value,
                   std::size_t cluster_size);
double gamma_beta(double d_i, std::span<const double> d_cluster, double cluster_value,
                  std::size_t cluster_size);

enum class Variant { kFull, kNoAlpha, kNoBeta, kNoAdjustment };

Method method_of(Variant variant);
bool uses_alpha(Variant variant);

struct EcoValConfig {
  std::size_t per_cluster_sample = 5;  // n_s
  Variant variant = Variant::kFull;
  TmcConfig tmc;
  std::size_t regressor_k = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Everything needed to value a point that was not part of B.
class FittedValuation {
 public:
  struct ClusterState {
    double value = 0.0;
    std::size_t size = 0;
    double q_sum = 0.0;
    double d_sum = 0.0;
    // Set when every member shares one Q (resp. d), so that factor is 1.
    std::optional<double> uniform_q;
    std::optional<double> uniform_d;
    bool alpha_fallback = false;
    bool beta_fallback = false;
  };

  FittedValuation(std::shared_ptr<const ClusterModel> model, std::vector<ClusterState> clusters,
                  std::optional<SurrogateModel> surrogate, Variant variant);

  // Frozen-cluster rule: assign x among the non-empty clusters, reuse V_c,
  // n_c and the stored sums, and evaluate Q and d at x. `id` is copied into
  // the returned record.
  PointRecord value_point(const Eigen::Ref<const Vector>& x, std::string id = {}) const;
  double value_oos(const Eigen::Ref<const Vector>& x) const { return value_point(x).value; }

  const ClusterModel& model() const { return *model_; }
  const std::vector<ClusterState>& clusters() const { return clusters_; }
  const std::optional<SurrogateModel>& surrogate() const { return surrogate_; }
  Variant variant() const { return variant_; }

 private:
  std::shared_ptr<const ClusterModel> model_;
  std::vector<ClusterState> clusters_;
  std::vector<bool> nonempty_;
  std::optional<SurrogateModel> surrogate_;
  Variant variant_;
};

struct EcoValRun {
  ValueReport report;  // one record per point of B, in B order
  std::vector<ClusterValue> clusters;
  IndexSet curated;  // D
  std::vector<double> curated_values;  // TMC values on D, aligned with `curated`
  std::size_t tmc_permutations = 0;
  FittedValuation fitted;
  Warnings warnings;
};

// LCO -> V_i -> curated subset -> TMC on D -> surrogate -> Q_i, d_i ->
// factors -> values. `players` is B; the cluster model has already been fitted.
EcoValRun ecoval_values(const SubsetUtility& game, const EmbeddingDataset& ds,
                        std::shared_ptr<const ClusterModel> model, std::span<const Index> players,
                        const EcoValConfig& config);

// Values every point of `points` (dataset rows) with the fitted state; the
// report carries the producing run's method tag and seed.
ValueReport value_points(const FittedValuation& fitted, const EmbeddingDataset& ds,
                         std::span<const Index> points, Method method, std::uint64_t seed);

struct ErrorBoundAudit {
  std::vector<std::string> ids;
  std::vector<double> observed;  // |estimate - exact|
  std::vector<double> bound;  // NaN for points in excluded clusters
  double delta_r = 0.0;  // max surrogate error over the curated subset
  std::vector<std::size_t> cluster_ids;
  std::vector<double> cluster_mean_exact;  // aligned with cluster_ids
  std::vector<std::size_t> excluded_clusters;  // zero Q sum
  double slack = 0.0;
  std::size_t evaluated = 0;
  std::size_t satisfied = 0;
  double satisfied_fraction = 0.0;
  double max_observed = 0.0;

  std::string to_json() const;
};

// Per point: n_c * mean_c * delta_R / sum Q + n_c^2 * mean_c * Q_i * delta_R / (sum Q)^2,
// each term taken in absolute value. `exact` is aligned with run.report.records.
ErrorBoundAudit audit_error_bound(const EcoValRun& run, std::span<const double> exact, double slack);

}  // namespace ecoval
