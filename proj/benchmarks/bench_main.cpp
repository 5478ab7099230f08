#include <benchmark/benchmark.h>

#include "nasgcn/arch_graph.hpp"
#include "nasgcn/gcn.hpp"
#include "nasgcn/metrics.hpp"
#include "nasgcn/random.hpp"

using namespace nasgcn;

namespace {

SearchSpaceSpec space(int layers) {
  SearchSpaceSpec s;
  s.num_layers = layers;
  s.choices_per_layer = 6;
  return s;
}

void BM_KendallTau(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = a[i] + rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTau)->RangeMultiplier(8)->Range(256, 1 << 17)->Complexity(benchmark::oNLogN);

void BM_BuildGraph(benchmark::State& state) {
  const auto sub = Subspace::full(space(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(sub, AssignedSimilarity{}));
  state.counters["nodes"] = static_cast<double>(sub.node_count());
}
BENCHMARK(BM_BuildGraph)->DenseRange(4, 7)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const ArchGraph graph = build_graph(Subspace::full(space(static_cast<int>(state.range(0)))), AssignedSimilarity{});
  GcnConfig config;
  config.hidden_dims = {static_cast<int>(state.range(1)), static_cast<int>(state.range(1))};
  const GcnModel model = init_model(graph.feature_dim(), config);
  const auto inputs = prepare_inputs<float>(graph);
  for (auto _ : state) benchmark::DoNotOptimize(forward(inputs, model));
}
BENCHMARK(BM_Forward)->Args({5, 32})->Args({6, 32})->Args({6, 512})->Args({7, 512})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
