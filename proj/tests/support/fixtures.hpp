#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ecoval/dataset.hpp"
#include "ecoval/ecoval.hpp"
#include "ecoval/gmm.hpp"
#include "ecoval/synth.hpp"
#include "ecoval/utility.hpp"

namespace ecoval::testing {

struct Bench {
  std::shared_ptr<const EmbeddingDataset> ds;
  SplitSpec splits;
};

// Two-class Gaussian blobs (radius 10, unit spread) split by the given fractions.
Bench blob_bench(std::size_t m, double noise, std::uint64_t seed, const std::array<double, 4>& fractions);

// The 200-point benchmark with 10% label noise.
Bench standard_bench(std::uint64_t seed, const std::array<double, 4>& fractions);

// GMM fitted on train + distribution_pool, as the CLI does it.
std::shared_ptr<const ClusterModel> fit_on_pool(const Bench& bench, ClusterConfig config);

Matrix rows_of(const EmbeddingDataset& ds, std::span<const Index> rows);

std::shared_ptr<const EmbeddingDataset> make_dataset(const std::vector<std::array<double, 2>>& points,
                                                     const std::vector<int>& labels);

// Explicit game over player positions 0..n-1, for axiom checks that need no
// classifier.
class FunctionGame final : public SubsetUtility {
 public:
  explicit FunctionGame(std::function<double(std::span<const Index>)> fn) : fn_(std::move(fn)) {}
  double utility(std::span<const Index> subset) const override { return fn_(subset); }

 private:
  std::function<double(std::span<const Index>)> fn_;
};

// a * U1 + b * U2.
class CompositeGame final : public SubsetUtility {
 public:
  CompositeGame(const SubsetUtility& u1, const SubsetUtility& u2, double a, double b)
      : u1_(u1), u2_(u2), a_(a), b_(b) {}
  double utility(std::span<const Index> subset) const override {
    return a_ * u1_.utility(subset) + b_ * u2_.utility(subset);
  }

 private:
  const SubsetUtility& u1_;
  const SubsetUtility& u2_;
  double a_;
  double b_;
};

// Shapley values as the mean marginal over all |B|! orderings. Independent of
// the subset-weight enumeration in the library; keep |B| <= 8.
std::vector<double> permutation_shapley(const SubsetUtility& game, std::span<const Index> players);

// 1-NN test accuracy computed by a plain scan (ties to the lower row index).
double brute_force_1nn_accuracy(const EmbeddingDataset& ds, std::span<const Index> train,
                                std::span<const Index> test);

// Sum of value over the members of every cluster, keyed like run.clusters.
std::vector<double> cluster_sums(const EcoValRun& run);

}  // namespace ecoval::testing
