#include <benchmark/benchmark.h>

#include <random>

#include "hardylab/capacity.hpp"
#include "hardylab/content.hpp"
#include "hardylab/maximal.hpp"

using namespace hardylab;

namespace {

void BM_RestrictedMaximal(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  GridShape s(2, 1.0 / n, {n, n, 1}, {0, 0, 0});
  ScalarField f(s);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (double& v : f.values) v = U(rng);
  MaximalQuery q;
  q.field = &f;
  q.uniform_cap = 0.125;
  for (auto _ : state) benchmark::DoNotOptimize(restricted_maximal(q).values.data());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.size()));
}
BENCHMARK(BM_RestrictedMaximal)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_BallCapacity(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  const double p = static_cast<double>(state.range(1)) / 2.0;
  const int K = static_cast<int>(2.25 * 0.5 * res + 0.5);
  GridShape s(2, 1.0 / res, {2 * K + 1, 2 * K + 1, 1}, {-(K + 0.5) / res, -(K + 0.5) / res, 0});
  const CellMask all(s.size(), 1);
  const auto problem = ball_condenser(s, all, s.index({K, K, 0}), 0.5, 1.0, p);
  for (auto _ : state) benchmark::DoNotOptimize(solve_capacity(problem).value);
}
BENCHMARK(BM_BallCapacity)->Args({64, 4})->Args({128, 4})->Args({64, 3})->Args({64, 6})->Unit(benchmark::kMillisecond);

void BM_GreedyContent(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  GridShape s(2, 1.0 / n, {n, n, 1}, {0, 0, 0});
  std::vector<Index> E;
  for (int x = n / 4; x < 3 * n / 4; ++x) E.push_back(s.index({x, n / 2, 0}));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_content(s, E, 1.0, 0.25, {0, 0, 0, false}).upper_value);
}
BENCHMARK(BM_GreedyContent)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
