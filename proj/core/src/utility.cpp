#include "ecoval/utility.hpp"

#include <algorithm>
#include <bit>

#include "ecoval/error.hpp"

namespace ecoval {
namespace {

constexpr std::size_t kMaxCachedDistances = std::size_t{1} << 22;

}  // namespace

double SubsetUtility::marginal(std::span<const Index> subset, Index z) const {
  if (std::find(subset.begin(), subset.end(), z) != subset.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "marginal contribution requires z = " + std::to_string(z) + " outside S");
  }
  IndexSet with(subset.begin(), subset.end());
  with.push_back(z);
  return utility(with) - utility(subset);
}

void UtilitySpec::validate() const {
  if (knn_k < 1) throw Error(ErrorCode::kInvalidArgument, "knn_k must be >= 1");
  if (logistic.epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (!(logistic.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  }
  if (!(logistic.l2 >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "l2 must be >= 0");
  if (empty_set_utility && !(*empty_set_utility >= 0.0 && *empty_set_utility <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "empty_set_utility must lie in [0, 1]");
  }
}

std::size_t UtilityEvaluator::KeyHash::operator()(const Key& key) const noexcept {
  std::uint64_t h = 0x9E3779B97F4A7C15ull;
  for (std::uint64_t w : key) {
    std::uint64_t z = w + 0x9E3779B97F4A7C15ull + h;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    h = z ^ (z >> 31);
  }
  return static_cast<std::size_t>(h);
}

UtilityEvaluator::UtilityEvaluator(std::shared_ptr<const EmbeddingDataset> dataset, IndexSet test,
                                   UtilitySpec spec)
    : dataset_(std::move(dataset)), test_(std::move(test)), spec_(spec) {
  if (!dataset_) throw Error(ErrorCode::kInvalidArgument, "evaluator needs a dataset");
  spec_.validate();
  if (test_.empty()) throw Error(ErrorCode::kInvalidArgument, "the test split is empty");
  for (Index t : test_) {
    if (t >= dataset_->size()) {
      throw Error(ErrorCode::kInvalidArgument, "test index " + std::to_string(t) + " out of range");
    }
  }
  empty_utility_ = spec_.empty_set_utility.value_or(1.0 / static_cast<double>(dataset_->num_classes()));

  if (spec_.model == ModelKind::kKnn && test_.size() * dataset_->size() <= kMaxCachedDistances) {
    const Matrix& p = dataset_->points();
    test_distances_.resize(static_cast<Eigen::Index>(test_.size()), p.rows());
    for (std::size_t t = 0; t < test_.size(); ++t) {
      const auto q = p.row(static_cast<Eigen::Index>(test_[t]));
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        test_distances_(static_cast<Eigen::Index>(t), i) = (p.row(i) - q).squaredNorm();
      }
    }
  }
}

double UtilityEvaluator::utility(std::span<const Index> subset) const {
  const std::size_t m = dataset_->size();
  Key key((m + 63) / 64, 0);
  bool empty = true;
  for (Index i : subset) {
    if (i >= m) {
      throw Error(ErrorCode::kInvalidArgument,
                  "subset index " + std::to_string(i) + " out of range for m = " + std::to_string(m));
    }
    key[i / 64] |= std::uint64_t{1} << (i % 64);
    empty = false;
  }
  if (empty) return empty_utility_;

  std::shared_future<double> pending;
  std::promise<double> promise;
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      cache_hits_.fetch_add(1, std::memory_order_relaxed);
      pending = it->second;
    } else {
      cache_.emplace(key, promise.get_future().share());
    }
  }
  if (pending.valid()) return pending.get();

  IndexSet canonical;
  canonical.reserve(subset.size());
  for (std::size_t w = 0; w < key.size(); ++w) {
    for (std::uint64_t bits = key[w]; bits != 0; bits &= bits - 1) {
      canonical.push_back(w * 64 + static_cast<Index>(std::countr_zero(bits)));
    }
  }
  training_runs_.fetch_add(1, std::memory_order_relaxed);
  try {
    const double value = train_and_score(canonical);
    promise.set_value(value);
    return value;
  } catch (...) {
    promise.set_exception(std::current_exception());
    throw;
  }
}

double UtilityEvaluator::train_and_score(std::span<const Index> sorted_subset) const {
  const Matrix& p = dataset_->points();
  const std::span<const int> labels = dataset_->labels();
  std::size_t correct = 0;
  if (spec_.model == ModelKind::kKnn) {
    for (std::size_t t = 0; t < test_.size(); ++t) {
      int predicted = 0;
      if (test_distances_.size() != 0) {
        const auto row = static_cast<Eigen::Index>(t);
        predicted = knn_vote_with(sorted_subset, labels, spec_.knn_k, [&](Index i) {
          return test_distances_(row, static_cast<Eigen::Index>(i));
        });
      } else {
        predicted = knn_vote(p, labels, sorted_subset,
                             p.row(static_cast<Eigen::Index>(test_[t])).transpose(), spec_.knn_k);
      }
      correct += predicted == labels[test_[t]] ? 1 : 0;
    }
  } else {
    const auto model =
        LogisticModel::fit(p, labels, sorted_subset, dataset_->num_classes(), spec_.logistic);
    for (Index t : test_) {
      correct += model.predict(p.row(static_cast<Eigen::Index>(t)).transpose()) == labels[t] ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test_.size());
}

RunLedger UtilityEvaluator::ledger() const {
  return RunLedger{training_runs_.load(), cache_hits_.load()};
}

void UtilityEvaluator::reset() {
  std::lock_guard lock(mutex_);
  cache_.clear();
  training_runs_ = 0;
  cache_hits_ = 0;
}

}  // namespace ecoval
