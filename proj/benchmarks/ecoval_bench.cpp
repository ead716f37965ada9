#include <benchmark/benchmark.h>

#include <algorithm>
#include <memory>

#include "ecoval/dataset.hpp"
#include "ecoval/ecoval.hpp"
#include "ecoval/gmm.hpp"
#include "ecoval/shapley.hpp"
#include "ecoval/synth.hpp"
#include "ecoval/utility.hpp"

namespace {

using namespace ecoval;

struct Setup {
  std::shared_ptr<const EmbeddingDataset> ds;
  SplitSpec splits;
};

Setup make_setup(std::size_t m, std::size_t dim) {
  BlobOptions o;
  o.m = m;
  o.dim = dim;
  o.label_noise = 0.1;
  o.seed = 1;
  auto ds = std::make_shared<const EmbeddingDataset>(make_blobs(o));
  auto splits = make_splits(*ds, {0.5, 0.2, 0.3, 0.0}, 1);
  return {ds, splits};
}

Matrix rows(const EmbeddingDataset& ds, const IndexSet& idx) {
  Matrix x(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(ds.dim()));
  for (std::size_t i = 0; i < idx.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = ds.point(idx[i]);
  return x;
}

void BM_KnnUtility(benchmark::State& state) {
  const auto s = make_setup(static_cast<std::size_t>(state.range(0)), 16);
  for (auto _ : state) {
    UtilityEvaluator ev(s.ds, s.splits.test, {});
    benchmark::DoNotOptimize(ev.utility(s.splits.train));
  }
}
BENCHMARK(BM_KnnUtility)->Arg(200)->Arg(1000)->Arg(4000);

void BM_LogisticUtility(benchmark::State& state) {
  const auto s = make_setup(static_cast<std::size_t>(state.range(0)), 16);
  UtilitySpec spec;
  spec.model = ModelKind::kLogistic;
  for (auto _ : state) {
    UtilityEvaluator ev(s.ds, s.splits.test, spec);
    benchmark::DoNotOptimize(ev.utility(s.splits.train));
  }
}
BENCHMARK(BM_LogisticUtility)->Arg(200)->Arg(1000);

void BM_GmmFit(benchmark::State& state) {
  const auto s = make_setup(1000, 8);
  const Matrix x = rows(*s.ds, s.splits.train);
  ClusterConfig cfg;
  cfg.n_components = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_gmm(x, cfg));
}
BENCHMARK(BM_GmmFit)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Tmc(benchmark::State& state) {
  const auto s = make_setup(static_cast<std::size_t>(state.range(0)) * 2, 8);
  TmcConfig cfg;
  for (auto _ : state) {
    UtilityEvaluator ev(s.ds, s.splits.test, {});
    benchmark::DoNotOptimize(tmc_shapley(ev, s.splits.train, cfg));
  }
}
BENCHMARK(BM_Tmc)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_EcoValPipeline(benchmark::State& state) {
  const auto s = make_setup(static_cast<std::size_t>(state.range(0)) * 2, 8);
  IndexSet fit_rows = s.splits.train;
  fit_rows.insert(fit_rows.end(), s.splits.distribution_pool.begin(), s.splits.distribution_pool.end());
  std::sort(fit_rows.begin(), fit_rows.end());
  ClusterConfig cc;
  cc.n_components = 10;
  const auto model = std::make_shared<const ClusterModel>(fit_gmm(rows(*s.ds, fit_rows), cc));
  EcoValConfig cfg;
  for (auto _ : state) {
    UtilityEvaluator ev(s.ds, s.splits.test, {});
    benchmark::DoNotOptimize(ecoval_values(ev, *s.ds, model, s.splits.train, cfg));
  }
}
BENCHMARK(BM_EcoValPipeline)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
