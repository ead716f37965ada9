#include "ecoval/ecoval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "ecoval/error.hpp"

namespace ecoval {
namespace {

constexpr double kZeroSum = 1e-9;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool all_identical(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
}

double factor_for(double share, const std::optional<double>& uniform, double sum, bool fallback,
                  double cluster_value, std::size_t cluster_size) {
  if (fallback) return 1.0;
  if (uniform && share == *uniform) return 1.0;
  if (std::abs(sum) < kZeroSum || 1.0 + cluster_value / static_cast<double>(cluster_size) == 0.0) {
    return 1.0;
  }
  return normalized_factor(share, sum, cluster_value, cluster_size);
}

}  // namespace

Membership assign_members(const ClusterModel& model, const EmbeddingDataset& ds,
                          std::span<const Index> players) {
  Membership m;
  m.cluster.reserve(players.size());
  m.distance.reserve(players.size());
  for (Index i : players) {
    const auto a = model.assign(ds.point(i).transpose());
    m.cluster.push_back(a.cluster);
    m.distance.push_back(a.distance);
  }
  return m;
}

std::vector<ClusterValue> lco_values(const SubsetUtility& game, std::span<const Index> players,
                                     const Membership& membership, std::size_t n_clusters,
                                     Warnings* warnings) {
  if (membership.cluster.size() != players.size()) {
    throw Error(ErrorCode::kShapeMismatch, "every point of B needs a cluster");
  }
  std::vector<IndexSet> members(n_clusters);
  for (std::size_t j = 0; j < players.size(); ++j) {
    if (membership.cluster[j] >= n_clusters) {
      throw Error(ErrorCode::kInvalidArgument, "cluster index out of range");
    }
    members[membership.cluster[j]].push_back(players[j]);
  }
  const double full = game.utility(players);
  std::vector<ClusterValue> out;
  std::size_t nonempty = 0;
  for (const auto& m : members) nonempty += m.empty() ? 0 : 1;
  if (nonempty == 1 && warnings) {
    warnings->push_back("all points fall in one cluster; its value is U(B) - U(empty set)");
  }
  IndexSet rest;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    if (members[c].empty()) continue;
    std::sort(members[c].begin(), members[c].end());
    rest.clear();
    for (Index i : players) {
      if (!std::binary_search(members[c].begin(), members[c].end(), i)) rest.push_back(i);
    }
    ClusterValue cv;
    cv.cluster_id = c;
    cv.value = full - game.utility(rest);
    cv.members = std::move(members[c]);
    out.push_back(std::move(cv));
  }
  return out;
}

std::vector<ClusterValue> lco_values(const SubsetUtility& game, const ClusterModel& model,
                                     const EmbeddingDataset& ds, std::span<const Index> players,
                                     Warnings* warnings) {
  return lco_values(game, players, assign_members(model, ds, players), model.n_components(), warnings);
}

std::vector<double> init_values(const ClusterValue& cluster) {
  if (cluster.size() == 0) throw Error(ErrorCode::kInvalidArgument, "cluster has no members");
  return std::vector<double>(cluster.size(), cluster.value / static_cast<double>(cluster.size()));
}

IndexSet curated_subset(std::span<const ClusterValue> clusters, std::size_t per_cluster,
                        std::uint64_t seed) {
  if (per_cluster < 1) throw Error(ErrorCode::kInvalidArgument, "n_s must be >= 1");
  IndexSet out;
  for (const auto& c : clusters) {
    IndexSet pool = c.members;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(c.cluster_id)};
    std::mt19937_64 rng(seq);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(per_cluster, pool.size()));
    out.insert(out.end(), pool.begin(), pool.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

double normalized_factor(double share, double share_sum, double cluster_value, std::size_t cluster_size) {
  const double per_point = cluster_value / static_cast<double>(cluster_size);
  return (1.0 + share / share_sum * cluster_value) / (1.0 + per_point);
}

std::vector<double> cluster_factors(std::span<const double> shares, double cluster_value, bool* fell_back) {
  if (fell_back) *fell_back = false;
  const std::size_t n = shares.size();
  if (n == 0) return {};
  if (all_identical(shares)) return std::vector<double>(n, 1.0);
  double sum = 0.0;
  for (double s : shares) sum += s;
  if (std::abs(sum) < kZeroSum || 1.0 + cluster_value / static_cast<double>(n) == 0.0) {
    if (fell_back) *fell_back = true;
    return std::vector<double>(n, 1.0);
  }
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = normalized_factor(shares[j], sum, cluster_value, n);
  return out;
}

namespace {

double single_factor(double x_i, std::span<const double> cluster, double cluster_value,
                     std::size_t cluster_size) {
  if (cluster_size < 1) throw Error(ErrorCode::kInvalidArgument, "n_c must be >= 1");
  if (!cluster.empty() && all_identical(cluster) && x_i == cluster.front()) return 1.0;
  double sum = 0.0;
  for (double s : cluster) sum += s;
  if (std::abs(sum) < kZeroSum || 1.0 + cluster_value / static_cast<double>(cluster_size) == 0.0) {
    return 1.0;
  }
  return normalized_factor(x_i, sum, cluster_value, cluster_size);
}

}  // namespace

double gamma_alpha(double q_i, std::span<const double> q_cluster, double cluster_value,
                   std::size_t cluster_size) {
  return single_factor(q_i, q_cluster, cluster_value, cluster_size);
}

double gamma_beta(double d_i, std::span<const double> d_cluster, double cluster_value,
                  std::size_t cluster_size) {
  return single_factor(d_i, d_cluster, cluster_value, cluster_size);
}

Method method_of(Variant variant) {
  switch (variant) {
    case Variant::kFull: return Method::kEcoVal;
    case Variant::kNoAlpha: return Method::kEcoValNoAlpha;
    case Variant::kNoBeta: return Method::kEcoValNoBeta;
    case Variant::kNoAdjustment: return Method::kEcoValNoAdjustment;
  }
  return Method::kEcoVal;
}

bool uses_alpha(Variant variant) { return variant == Variant::kFull || variant == Variant::kNoBeta; }

void EcoValConfig::validate() const {
  if (per_cluster_sample < 1) throw Error(ErrorCode::kInvalidArgument, "per_cluster_sample must be >= 1");
  if (regressor_k < 1) throw Error(ErrorCode::kInvalidArgument, "regressor_k must be >= 1");
  tmc.validate();
}

FittedValuation::FittedValuation(std::shared_ptr<const ClusterModel> model,
                                 std::vector<ClusterState> clusters,
                                 std::optional<SurrogateModel> surrogate, Variant variant)
    : model_(std::move(model)), clusters_(std::move(clusters)), surrogate_(std::move(surrogate)), variant_(variant) {
  if (!model_ || clusters_.size() != model_->n_components()) {
    throw Error(ErrorCode::kNotFitted, "fitted valuation needs one state per cluster");
  }
  if (uses_alpha(variant_) && !surrogate_) {
    throw Error(ErrorCode::kNotFitted, "this variant needs a fitted surrogate");
  }
  nonempty_.resize(clusters_.size());
  bool any = false;
  for (std::size_t c = 0; c < clusters_.size(); ++c) {
    nonempty_[c] = clusters_[c].size > 0;
    any = any || nonempty_[c];
  }
  if (!any) throw Error(ErrorCode::kNotFitted, "no cluster holds a valued point");
}

PointRecord FittedValuation::value_point(const Eigen::Ref<const Vector>& x, std::string id) const {
  const auto a = model_->assign(x, nonempty_);
  const auto& st = clusters_[a.cluster];

  PointRecord r;
  r.id = std::move(id);
  r.cluster_id = static_cast<long>(a.cluster);
  r.cluster_value = st.value;
  r.cluster_size = st.size;
  r.initial_value = st.value / static_cast<double>(st.size);
  r.distance = a.distance;
  r.predicted = surrogate_ ? surrogate_->predict(x) : kNaN;
  r.gamma_alpha = uses_alpha(variant_)
                      ? factor_for(r.predicted, st.uniform_q, st.q_sum, st.alpha_fallback, st.value, st.size)
                      : 1.0;
  const bool use_beta = variant_ == Variant::kFull || variant_ == Variant::kNoAlpha;
  r.gamma_beta = use_beta
                     ? factor_for(r.distance, st.uniform_d, st.d_sum, st.beta_fallback, st.value, st.size)
                     : 1.0;
  r.value = r.initial_value * (r.gamma_alpha + r.gamma_beta - 1.0);
  return r;
}

EcoValRun ecoval_values(const SubsetUtility& game, const EmbeddingDataset& ds,
                        std::shared_ptr<const ClusterModel> model, std::span<const Index> players,
                        const EcoValConfig& config) {
  config.validate();
  if (!model) throw Error(ErrorCode::kNotFitted, "EcoVal needs a fitted cluster model");
  if (players.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to value");
  if (model->dim() != ds.dim()) throw Error(ErrorCode::kShapeMismatch, "cluster model dimension differs from data");

  Warnings warnings;
  const Membership membership = assign_members(*model, ds, players);
  auto clusters = lco_values(game, players, membership, model->n_components(), &warnings);

  const Variant variant = config.variant;
  IndexSet curated;
  std::vector<double> curated_values;
  std::size_t permutations = 0;
  std::optional<SurrogateModel> surrogate;
  if (uses_alpha(variant)) {
    curated = curated_subset(clusters, config.per_cluster_sample, config.seed);
    const auto tmc = tmc_shapley(game, curated, config.tmc);
    curated_values = tmc.values;
    permutations = tmc.permutations_used;
    const std::size_t k = std::min(config.regressor_k, curated.size());
    if (k < config.regressor_k) {
      warnings.push_back("regressor k clamped to the curated subset size " + std::to_string(k));
    }
    surrogate.emplace(ds.points(), curated, curated_values, k);
  }

  // Per-point intermediates in B order.
  const std::size_t n = players.size();
  std::vector<double> q(n, kNaN);
  if (surrogate) {
    for (std::size_t j = 0; j < n; ++j) q[j] = surrogate->predict(ds.point(players[j]).transpose());
  }
  std::vector<std::size_t> position_of_cluster(model->n_components(), clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) position_of_cluster[clusters[c].cluster_id] = c;

  std::vector<std::vector<std::size_t>> rows(clusters.size());
  for (std::size_t j = 0; j < n; ++j) rows[position_of_cluster[membership.cluster[j]]].push_back(j);

  std::vector<FittedValuation::ClusterState> states(model->n_components());
  std::vector<double> gamma_a(n, 1.0);
  std::vector<double> gamma_b(n, 1.0);
  const bool use_beta = variant == Variant::kFull || variant == Variant::kNoAlpha;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& cv = clusters[c];
    auto& st = states[cv.cluster_id];
    st.value = cv.value;
    st.size = cv.size();
    std::vector<double> qs;
    std::vector<double> dists;
    for (std::size_t j : rows[c]) {
      qs.push_back(q[j]);
      dists.push_back(membership.distance[j]);
    }
    for (double x : qs) st.q_sum += x;
    for (double x : dists) st.d_sum += x;
    if (all_identical(dists)) st.uniform_d = dists.front();
    if (uses_alpha(variant)) {
      if (all_identical(qs)) st.uniform_q = qs.front();
      const auto ga = cluster_factors(qs, cv.value, &st.alpha_fallback);
      for (std::size_t t = 0; t < rows[c].size(); ++t) gamma_a[rows[c][t]] = ga[t];
      if (st.alpha_fallback) {
        warnings.push_back("cluster " + std::to_string(cv.cluster_id) +
                           ": surrogate values sum to zero; gamma_alpha set to 1");
      }
    }
    if (use_beta) {
      const auto gb = cluster_factors(dists, cv.value, &st.beta_fallback);
      for (std::size_t t = 0; t < rows[c].size(); ++t) gamma_b[rows[c][t]] = gb[t];
    }
  }

  EcoValRun run{
      .report = {},
      .clusters = {},
      .curated = std::move(curated),
      .curated_values = std::move(curated_values),
      .tmc_permutations = permutations,
      .fitted = FittedValuation(model, states, std::move(surrogate), variant),
      .warnings = {},
  };
  auto& report = run.report;
  report.method = method_of(variant);
  report.seed = config.seed;
  report.notes["cluster_fit_set"] = "train+distribution_pool";
  report.notes["oos_rule"] = "frozen-cluster";
  report.notes["per_cluster_sample"] = std::to_string(config.per_cluster_sample);
  report.notes["curated_size"] = std::to_string(run.curated.size());
  report.notes["clusters_nonempty"] = std::to_string(clusters.size());
  report.records.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& st = states[membership.cluster[j]];
    PointRecord r;
    r.id = ds.id(players[j]);
    r.cluster_id = static_cast<long>(membership.cluster[j]);
    r.cluster_value = st.value;
    r.cluster_size = st.size;
    r.initial_value = st.value / static_cast<double>(st.size);
    r.predicted = q[j];
    r.distance = membership.distance[j];
    r.gamma_alpha = gamma_a[j];
    r.gamma_beta = gamma_b[j];
    r.value = r.initial_value * (r.gamma_alpha + r.gamma_beta - 1.0);
    report.records.push_back(std::move(r));
  }
  report.ledger = ledger_of(game);
  run.clusters = std::move(clusters);
  run.warnings = std::move(warnings);
  return run;
}

ValueReport value_points(const FittedValuation& fitted, const EmbeddingDataset& ds,
                         std::span<const Index> points, Method method, std::uint64_t seed) {
  ValueReport report;
  report.method = method;
  report.seed = seed;
  report.notes["oos_rule"] = "frozen-cluster";
  for (Index i : points) report.records.push_back(fitted.value_point(ds.point(i).transpose(), ds.id(i)));
  return report;
}

ErrorBoundAudit audit_error_bound(const EcoValRun& run, std::span<const double> exact, double slack) {
  const auto& records = run.report.records;
  if (exact.size() != records.size()) {
    throw Error(ErrorCode::kShapeMismatch, "exact values must align with the report records");
  }
  const auto& surrogate = run.fitted.surrogate();
  if (!surrogate) throw Error(ErrorCode::kNotFitted, "the error-bound audit needs a fitted surrogate");

  ErrorBoundAudit audit;
  audit.slack = slack;
  for (std::size_t s = 0; s < surrogate->size(); ++s) {
    const double err = std::abs(surrogate->predict(surrogate->sample_points().row(static_cast<Eigen::Index>(s)).transpose()) -
                                surrogate->targets()[s]);
    audit.delta_r = std::max(audit.delta_r, err);
  }

  const auto& states = run.fitted.clusters();
  std::vector<double> exact_sum(states.size(), 0.0);
  for (std::size_t j = 0; j < records.size(); ++j) {
    exact_sum[static_cast<std::size_t>(records[j].cluster_id)] += exact[j];
  }
  std::vector<double> mean_exact(states.size(), 0.0);
  for (std::size_t c = 0; c < states.size(); ++c) {
    if (states[c].size == 0) continue;
    mean_exact[c] = exact_sum[c] / static_cast<double>(states[c].size);
    audit.cluster_ids.push_back(c);
    audit.cluster_mean_exact.push_back(mean_exact[c]);
    if (std::abs(states[c].q_sum) < kZeroSum) audit.excluded_clusters.push_back(c);
  }

  for (std::size_t j = 0; j < records.size(); ++j) {
    const auto& r = records[j];
    const auto c = static_cast<std::size_t>(r.cluster_id);
    const auto& st = states[c];
    const double observed = std::abs(r.value - exact[j]);
    audit.ids.push_back(r.id);
    audit.observed.push_back(observed);
    audit.max_observed = std::max(audit.max_observed, observed);
    if (std::abs(st.q_sum) < kZeroSum) {
      audit.bound.push_back(kNaN);
      continue;
    }
    const double nc = static_cast<double>(st.size);
    const double first = nc * mean_exact[c] * audit.delta_r / st.q_sum;
    const double second = nc * nc * mean_exact[c] * r.predicted * audit.delta_r / (st.q_sum * st.q_sum);
    const double bound = std::abs(first) + std::abs(second);
    audit.bound.push_back(bound);
    ++audit.evaluated;
    if (observed <= bound + slack) ++audit.satisfied;
  }
  audit.satisfied_fraction =
      audit.evaluated == 0 ? 0.0 : static_cast<double>(audit.satisfied) / static_cast<double>(audit.evaluated);
  return audit;
}

std::string ErrorBoundAudit::to_json() const {
  nlohmann::json j;
  j["delta_r"] = delta_r;
  j["slack"] = slack;
  j["evaluated"] = evaluated;
  j["satisfied"] = satisfied;
  j["satisfied_fraction"] = satisfied_fraction;
  j["max_observed"] = max_observed;
  j["excluded_clusters"] = excluded_clusters;
  auto& cl = j["clusters"] = nlohmann::json::array();
  for (std::size_t c = 0; c < cluster_ids.size(); ++c) {
    cl.push_back({{"cluster_id", cluster_ids[c]}, {"mean_exact", cluster_mean_exact[c]}});
  }
  auto& pts = j["points"] = nlohmann::json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    nlohmann::json p = {{"id", ids[i]}, {"observed", observed[i]}};
    p["bound"] = std::isnan(bound[i]) ? nlohmann::json(nullptr) : nlohmann::json(bound[i]);
    pts.push_back(std::move(p));
  }
  return j.dump(2);
}

}  // namespace ecoval
