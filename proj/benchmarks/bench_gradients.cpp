#include <benchmark/benchmark.h>

#include "sdgrad/driver.hpp"

using namespace sdg;

namespace {

const char* const kKernels[] = {"BATAX", "SMMM", "SMVM", "VVA", "VVD", "VSM"};

void BM_Pipeline(benchmark::State& state) {
  const KernelEntry& k = *find_kernel(kKernels[state.range(0)]);
  state.SetLabel(k.name);
  for (auto _ : state) benchmark::DoNotOptimize(prepare_gradient(k));
}
BENCHMARK(BM_Pipeline)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

void BM_InterpretedGradient(benchmark::State& state) {
  const KernelEntry& k = *find_kernel(kKernels[state.range(0)]);
  GradientSetup g = prepare_gradient(k);
  std::int64_t n = state.range(1);
  KernelInstance inst = make_instance(k, g.specs, {{"n", n}, {"m", n}, {"k", n}}, 1.0 / 16, 1);
  state.SetLabel(k.name);
  for (auto _ : state) benchmark::DoNotOptimize(eval(inst.physical, g.pipeline.physical()));
  state.counters["nnz"] = static_cast<double>(inst.nnz);
}
BENCHMARK(BM_InterpretedGradient)->ArgsProduct({{0, 1, 2, 3, 4, 5}, {64, 256}})->Unit(benchmark::kMicrosecond);

void BM_LoweredGradient(benchmark::State& state) {
  const KernelEntry& k = *find_kernel(kKernels[state.range(0)]);
  GradientSetup g = prepare_gradient(k);
  Kernel kernel = lower_dps(g.pipeline.physical(), g.signature());
  KernelInstance inst = make_instance(k, g.specs, {{"n", 256}, {"m", 256}, {"k", 256}}, 1.0 / 16, 1);
  state.SetLabel(k.name);
  for (auto _ : state) benchmark::DoNotOptimize(run_kernel(kernel, inst.physical));
}
BENCHMARK(BM_LoweredGradient)->DenseRange(0, 5)->Unit(benchmark::kMicrosecond);

// Fixed dimension, varying sparsity.
void BM_DotGradientDensity(benchmark::State& state) {
  const KernelEntry& k = *find_kernel("VVD");
  GradientSetup g = prepare_gradient(k);
  double density = 1.0 / static_cast<double>(state.range(0));
  KernelInstance inst = make_instance(k, g.specs, {{"n", 1 << 16}}, density, 1);
  for (auto _ : state) benchmark::DoNotOptimize(eval(inst.physical, g.pipeline.physical()));
  state.counters["nnz"] = static_cast<double>(inst.nnz);
}
BENCHMARK(BM_DotGradientDensity)->RangeMultiplier(4)->Range(4, 256)->Unit(benchmark::kMicrosecond);

// Fixed sparsity, varying dimension.
void BM_DotGradientDimension(benchmark::State& state) {
  const KernelEntry& k = *find_kernel("VVD");
  GradientSetup g = prepare_gradient(k);
  KernelInstance inst = make_instance(k, g.specs, {{"n", state.range(0)}}, 1.0 / 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(eval(inst.physical, g.pipeline.physical()));
  state.counters["nnz"] = static_cast<double>(inst.nnz);
}
BENCHMARK(BM_DotGradientDimension)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
