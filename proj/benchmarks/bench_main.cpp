#include <benchmark/benchmark.h>

#include "clusca/clustering.hpp"
#include "clusca/model.hpp"
#include "clusca/noise_schedule.hpp"
#include "clusca/numeric.hpp"
#include "clusca/rng.hpp"
#include "clusca/sampler.hpp"

using namespace clusca;

static void BM_KMeans(benchmark::State& state) {
  SeededRng rng(1);
  const auto features = seeded_gaussian(256, 64, rng);
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(features, k, RandomInit{2}));
}
BENCHMARK(BM_KMeans)->Arg(4)->Arg(16)->Arg(64);

static void BM_KMeansWarm(benchmark::State& state) {
  SeededRng rng(1);
  const auto features = seeded_gaussian(256, 64, rng);
  const auto cold = kmeans(features, 16, RandomInit{2});
  auto drifted = features;
  drifted *= 1.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kmeans(drifted, 16, WarmStart{CentroidCache{cold.centroids, 0}}));
  }
}
BENCHMARK(BM_KMeansWarm);

static void BM_BlockForward(benchmark::State& state) {
  const ModelConfig cfg;
  const Model model(cfg);
  SeededRng rng(3);
  const auto x = seeded_gaussian(cfg.tokens(), cfg.dim, rng);
  const auto cond = model.conditioning(10, 0);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)); ++i) idx.push_back(i);
  const auto compute = ComputeSet::from_indices(idx, cfg.tokens());
  for (auto _ : state) {
    benchmark::DoNotOptimize(block_forward(model.blocks()[0], cfg, x, cond, compute));
  }
}
BENCHMARK(BM_BlockForward)->Arg(16)->Arg(256);

static void BM_Sample(benchmark::State& state) {
  const ModelConfig cfg;
  const Model model(cfg);
  const auto schedule = make_schedule(50, 0.999, 0.95, ScheduleShape::linear);
  CacheConfig cache;
  cache.policy = static_cast<PolicyKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample(model, cache, schedule, {}));
  state.SetLabel(std::string(to_string(cache.policy)));
}
BENCHMARK(BM_Sample)
    ->Arg(static_cast<int>(PolicyKind::full))
    ->Arg(static_cast<int>(PolicyKind::fora))
    ->Arg(static_cast<int>(PolicyKind::clusca))
    ->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
