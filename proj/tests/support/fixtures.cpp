#include "fixtures.hpp"

#include <algorithm>
#include <numeric>

namespace ecoval::testing {

Bench blob_bench(std::size_t m, double noise, std::uint64_t seed, const std::array<double, 4>& fractions) {
  BlobOptions options;
  options.m = m;
  options.label_noise = noise;
  options.seed = seed;
  Bench bench;
  bench.ds = std::make_shared<const EmbeddingDataset>(make_blobs(options));
  bench.splits = make_splits(*bench.ds, fractions, seed);
  return bench;
}

Bench standard_bench(std::uint64_t seed, const std::array<double, 4>& fractions) {
  return blob_bench(200, 0.1, seed, fractions);
}

Matrix rows_of(const EmbeddingDataset& ds, std::span<const Index> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ds.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = ds.point(rows[r]);
  return out;
}

std::shared_ptr<const ClusterModel> fit_on_pool(const Bench& bench, ClusterConfig config) {
  IndexSet rows = bench.splits.train;
  rows.insert(rows.end(), bench.splits.distribution_pool.begin(), bench.splits.distribution_pool.end());
  std::sort(rows.begin(), rows.end());
  return std::make_shared<const ClusterModel>(fit_gmm(rows_of(*bench.ds, rows), config));
}

std::shared_ptr<const EmbeddingDataset> make_dataset(const std::vector<std::array<double, 2>>& points,
                                                     const std::vector<int>& labels) {
  Matrix m(static_cast<Eigen::Index>(points.size()), 2);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < points.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = points[i][0];
    m(static_cast<Eigen::Index>(i), 1) = points[i][1];
    ids.push_back("x" + std::to_string(i));
  }
  int k = 2;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<std::string> names;
  for (int c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
  return std::make_shared<const EmbeddingDataset>(std::move(m), labels, std::move(ids), std::move(names));
}

std::vector<double> permutation_shapley(const SubsetUtility& game, std::span<const Index> players) {
  const std::size_t n = players.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> totals(n, 0.0);
  std::size_t count = 0;
  do {
    IndexSet prefix;
    double prev = game.utility(prefix);
    for (std::size_t pos : order) {
      prefix.push_back(players[pos]);
      IndexSet sorted = prefix;
      std::sort(sorted.begin(), sorted.end());
      const double next = game.utility(sorted);
      totals[pos] += next - prev;
      prev = next;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& t : totals) t /= static_cast<double>(count);
  return totals;
}

double brute_force_1nn_accuracy(const EmbeddingDataset& ds, std::span<const Index> train,
                                std::span<const Index> test) {
  std::size_t correct = 0;
  for (Index t : test) {
    Index best = train[0];
    double best_d = -1.0;
    for (Index i : train) {
      double d = 0.0;
      for (std::size_t c = 0; c < ds.dim(); ++c) {
        const double diff = ds.points()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) -
                            ds.points()(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
        d += diff * diff;
      }
      if (best_d < 0.0 || d < best_d || (d == best_d && i < best)) {
        best = i;
        best_d = d;
      }
    }
    if (ds.label(best) == ds.label(t)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<double> cluster_sums(const EcoValRun& run) {
  std::vector<double> sums;
  for (const auto& c : run.clusters) {
    double s = 0.0;
    for (const auto& r : run.report.records) {
      if (r.cluster_id == static_cast<long>(c.cluster_id)) s += r.value;
    }
    sums.push_back(s);
  }
  return sums;
}

}  // namespace ecoval::testing
