#pragma once

#include <atomic>
#include <cstdint>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "ecoval/classifiers.hpp"
#include "ecoval/dataset.hpp"
#include "ecoval/types.hpp"

namespace ecoval {

// Characteristic function of the valuation game: a performance score for any
// subset of dataset rows.
class SubsetUtility {
 public:
  virtual ~SubsetUtility() = default;
  virtual double utility(std::span<const Index> subset) const = 0;

  // U(S + {z}) - U(S). Throws kInvalidArgument when z is already in S.
  double marginal(std::span<const Index> subset, Index z) const;
};

enum class ModelKind { kKnn, kLogistic };
enum class Metric { kAccuracy };

struct UtilitySpec {
  ModelKind model = ModelKind::kKnn;
  std::size_t knn_k = 1;
  LogisticConfig logistic;
  Metric metric = Metric::kAccuracy;
  std::uint64_t seed = 0;
  // U(empty set). Unset means 1 / K, the random-guess accuracy.
  std::optional<double> empty_set_utility;

  void validate() const;
};

// Test-split accuracy of a classifier trained on a subset, memoised by the
// canonical (sorted, deduplicated) subset. Thread-safe: concurrent requests
// for the same subset train once and the rest count as cache hits. The empty
// set never trains and never touches the ledger.
class UtilityEvaluator final : public SubsetUtility {
 public:
  UtilityEvaluator(std::shared_ptr<const EmbeddingDataset> dataset, IndexSet test,
                   UtilitySpec spec);

  double utility(std::span<const Index> subset) const override;
  using SubsetUtility::marginal;

  double empty_set_utility() const { return empty_utility_; }
  const UtilitySpec& spec() const { return spec_; }
  const EmbeddingDataset& dataset() const { return *dataset_; }
  const IndexSet& test() const { return test_; }

  RunLedger ledger() const;
  // Drops every cached utility and zeroes the ledger.
  void reset();

 private:
  using Key = std::vector<std::uint64_t>;
  struct KeyHash {
    std::size_t operator()(const Key& key) const noexcept;
  };

  double train_and_score(std::span<const Index> sorted_subset) const;

  std::shared_ptr<const EmbeddingDataset> dataset_;
  IndexSet test_;
  UtilitySpec spec_;
  double empty_utility_;
  // Squared distances test x dataset when small enough to keep.
  Eigen::MatrixXd test_distances_;

  mutable std::mutex mutex_;
  mutable std::unordered_map<Key, std::shared_future<double>, KeyHash> cache_;
  mutable std::atomic<std::size_t> training_runs_{0};
  mutable std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace ecoval
