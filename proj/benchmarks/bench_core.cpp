#include <map>
#include <tuple>

#include <benchmark/benchmark.h>

#include "mhglm/group_fit.hpp"
#include "mhglm/linalg.hpp"
#include "mhglm/moment.hpp"
#include "mhglm/sim.hpp"

using namespace mhglm;

namespace {

const mhglm::Group& sample_group(Index n, Index pq, bool logit) {
  static std::map<std::tuple<Index, Index, bool>, GroupedDataset> cache;
  auto& d = cache[{n, pq, logit}];
  if (d.groups.empty()) {
    const Family f = logit ? Family::binomial() : Family::gaussian();
    d = sim::gen_replicate(sim::SimConfig{1, n, pq, pq, f}, 7).first;
  }
  return d.groups.front();
}

void BM_SummarizeGroupGaussian(benchmark::State& state) {
  const Group& g = sample_group(state.range(0), state.range(1), false);
  for (auto _ : state) benchmark::DoNotOptimize(summarize_group(g.id, g.y, g.X, g.Z, Family::gaussian()));
  state.SetItemsProcessed(state.iterations() * g.n());
}
BENCHMARK(BM_SummarizeGroupGaussian)->ArgsProduct({{10, 100, 1000}, {2, 5}});

void BM_SummarizeGroupLogit(benchmark::State& state) {
  const Group& g = sample_group(state.range(0), state.range(1), true);
  for (auto _ : state) benchmark::DoNotOptimize(summarize_group(g.id, g.y, g.X, g.Z, Family::binomial()));
  state.SetItemsProcessed(state.iterations() * g.n());
}
BENCHMARK(BM_SummarizeGroupLogit)->ArgsProduct({{10, 100, 1000}, {2, 5}});

void BM_SymSolver(benchmark::State& state) {
  const Index q = state.range(0);
  SymKroneckerSum op(q);
  MatrixXd A = MatrixXd::Identity(q, q);
  for (Index i = 0; i < q; ++i) A(i, (i + 1) % q) += 0.3;
  op.add_term(A * A.transpose());
  op.add_term(MatrixXd::Identity(q, q));
  for (auto _ : state) benchmark::DoNotOptimize(SymSolver(op));
}
BENCHMARK(BM_SymSolver)->DenseRange(2, 10, 4);

void BM_FitMomentGroups(benchmark::State& state) {
  const Index M = state.range(0);
  const auto data = sim::gen_replicate(sim::SimConfig{M, 50 * M, 2, 2, Family::gaussian()}, 3).first;
  for (auto _ : state) benchmark::DoNotOptimize(fit_moment(data, Family::gaussian()));
  state.SetItemsProcessed(state.iterations() * data.total_observations());
}
BENCHMARK(BM_FitMomentGroups)->RangeMultiplier(4)->Range(256, 16384)->Unit(benchmark::kMillisecond);

void BM_FitMomentLogitRows(benchmark::State& state) {
  const Index N = state.range(0);
  const auto data = sim::gen_replicate(sim::SimConfig{1000, N, 3, 3, Family::binomial()}, 4).first;
  for (auto _ : state) benchmark::DoNotOptimize(fit_moment(data, Family::binomial()));
  state.SetItemsProcessed(state.iterations() * N);
}
BENCHMARK(BM_FitMomentLogitRows)->RangeMultiplier(4)->Range(10000, 640000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
