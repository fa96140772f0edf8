#include <numbers>

#include <benchmark/benchmark.h>

#include "flatpmp/oracle.hpp"

namespace flatpmp {
namespace {

using std::numbers::pi;

SimulationConfig steering_config() {
  SimulationConfig c;
  c.x0 = Vec3(0, -1, pi / 3);
  c.weights = WeightSet::from_q_m(100.0 * Mat2::Identity(), Mat2::Identity());
  return c;
}

void BM_ControlStep(benchmark::State& state) {
  const SimulationConfig c = steering_config();
  const FlatSystemDescriptor system = steerable_axle();
  const ReferenceSignal reference = lissajous(c.horizon);
  ControllerContext ctx;
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(control_step(system, c.weights, c.bounds, reference, c.x0, t,
                                          ControllerTuning{}, ctx));
    t = t < c.horizon ? t + 1e-3 : 0.0;
  }
}
BENCHMARK(BM_ControlStep);

void BM_Simulate(benchmark::State& state) {
  SimulationConfig c = steering_config();
  c.dt = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(c));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(c.horizon / c.dt));
}
BENCHMARK(BM_Simulate)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_PmpResiduals(benchmark::State& state) {
  const SimulationConfig c = steering_config();
  const SimulationLog log = simulate(c);
  const FlatSystemDescriptor system = steerable_axle();
  const ReferenceSignal reference = lissajous(c.horizon);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pmp_residuals(log, system, c.weights, reference));
  }
}
BENCHMARK(BM_PmpResiduals)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace flatpmp

// The packaged benchmark_main archive carries LTO bytecode from another compiler.
BENCHMARK_MAIN();
