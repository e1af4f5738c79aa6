#include <benchmark/benchmark.h>

#include <vector>

#include "fedgan/datasets.hpp"
#include "fedgan/federation.hpp"
#include "fedgan/metrics.hpp"
#include "fedgan/models.hpp"

namespace fedgan {
namespace {

struct GaussSetup {
  Dataset data = gen_mixed_gaussians(4000, 8, 2.0, 0.02, 3);
  GanModel model;
  Partition partition;
  RunOptions opts;

  GaussSetup(std::size_t hidden, std::size_t agents) : model(make_mlp_gan(hidden, 2, 2, 2)) {
    partition = partition_noniid(data, agents, agents >= 2 ? PartitionStrategy::kByLabel : PartitionStrategy::kIid, 4);
    opts.master_seed = 5;
    opts.init_scale = 0.0;
  }
};

void BM_LocalStep(benchmark::State& state) {
  GaussSetup s(static_cast<std::size_t>(state.range(0)), 1);
  std::vector<AgentState> agents = make_agents(s.model, s.partition, s.opts);
  for (auto _ : state) local_step(agents[0], s.model, LossKind::kMinimax, s.data, 1e-4, 1e-4, 64);
}
BENCHMARK(BM_LocalStep)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_Sync(benchmark::State& state) {
  GaussSetup s(64, static_cast<std::size_t>(state.range(0)));
  std::vector<AgentState> agents = make_agents(s.model, s.partition, s.opts);
  for (AgentState& a : agents) local_step(a, s.model, LossKind::kMinimax, s.data, 1e-4, 1e-4, 64);
  for (auto _ : state) benchmark::DoNotOptimize(sync(agents));
}
BENCHMARK(BM_Sync)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_Mmd2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset a = gen_mixed_gaussians(n, 8, 2.0, 0.02, 1);
  const Dataset b = gen_mixed_gaussians(n, 8, 2.0, 0.02, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mmd2(a.samples, b.samples, 0.5));
  state.SetComplexityN(static_cast<benchmark::IterationCount>(n));
}
BENCHMARK(BM_Mmd2)->Arg(500)->Arg(1000)->Arg(2000)->Complexity(benchmark::oNSquared)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
  const Dataset d = gen_mixed_gaussians(static_cast<std::size_t>(state.range(0)), 8, 2.0, 0.05, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(d.samples, 8, 7));
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace fedgan

BENCHMARK_MAIN();
