#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "ptf/calculus.hpp"
#include "ptf/flow.hpp"

using namespace ptf;
using std::numbers::pi;

namespace {

std::shared_ptr<const DomainMesh> square(int n) {
  return std::make_shared<const DomainMesh>(DomainMesh::build({Topology::rectangle_dirichlet, {n, n}, {1.0, 1.0}, {}, {}}));
}

MapField hyperbolic_map(int n) {
  const auto h = std::make_shared<const TargetManifold>(TargetManifold::hyperboloid(2));
  return MapField::from_function(square(n), h, [&](DomainPoint x) {
    return h->from_normal_coordinates({x[0] - 0.5, std::sin(pi * x[1]) * std::cos(pi * x[0])});
  });
}

void BM_TensionField(benchmark::State& state) {
  const MapField f = hyperbolic_map(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tension_field(f));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.size()));
}
BENCHMARK(BM_TensionField)->Arg(33)->Arg(65)->Arg(129);

void BM_Energy(benchmark::State& state) {
  const MapField f = hyperbolic_map(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(energy(f));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.size()));
}
BENCHMARK(BM_Energy)->Arg(65)->Arg(129);

void BM_FlowStep(benchmark::State& state) {
  MapField g = hyperbolic_map(static_cast<int>(state.range(0)));
  const auto target = g.target_ptr();
  FlowConfig config(std::move(g), dist_sq_potential(target, target->origin(), 1.0));
  config.threads = static_cast<int>(state.range(1));
  const FlowState s0 = initialize(config);
  const double dt = config.time_step();
  for (auto _ : state) benchmark::DoNotOptimize(step(config, s0, dt));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s0.f.size()));
}
BENCHMARK(BM_FlowStep)->Args({65, 1})->Args({129, 1})->Args({129, 4});

void BM_FirstEigenvalue(benchmark::State& state) {
  const auto mesh = square(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(first_dirichlet_eigenvalue(*mesh));
}
BENCHMARK(BM_FirstEigenvalue)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
