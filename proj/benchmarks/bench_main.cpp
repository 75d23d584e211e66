#include <benchmark/benchmark.h>

#include <vector>

#include "phlab/disintegration.hpp"
#include "phlab/ergodic_stats.hpp"
#include "phlab/kan.hpp"
#include "phlab/map_models.hpp"
#include "phlab/random.hpp"
#include "phlab/semiconjugacy.hpp"
#include "phlab/torus.hpp"

using namespace phlab;

namespace {

const IntMat3 kRef{1, -1, 0, -1, 2, -1, 0, -1, 2};

void BM_SpectralSplit(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(spectral_split(kRef));
}
BENCHMARK(BM_SpectralSplit);

void BM_DAEvaluate(benchmark::State& state) {
  const DAMap f = reference_da_map();
  TorusPoint p(0.1, 0.2, 0.3);
  for (auto _ : state) {
    p = f.evaluate(p);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_DAEvaluate);

void BM_Lyapunov(benchmark::State& state) {
  const DAMap f = reference_da_map();
  for (auto _ : state) benchmark::DoNotOptimize(lyapunov_spectrum(f, state.range(0), 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Lyapunov)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ConjugacyResidual(benchmark::State& state) {
  const Conjugator c = Conjugator::with_tolerance(reference_da_map(), 1e-8);
  Rng rng(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(c.residual(TorusPoint(rng.uniform(), rng.uniform(), rng.uniform())));
}
BENCHMARK(BM_ConjugacyResidual);

void BM_PlissBlocks(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> a(static_cast<std::size_t>(state.range(0)));
  for (double& v : a) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(pliss_blocks(a, 0.1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PlissBlocks)->Arg(1 << 16);

void BM_Disintegrate(benchmark::State& state) {
  const DAMap f = DAMap::linear(reference_automorphism());
  BoxSpec b;
  b.center = LiftPoint{{0.5, 0.5, 0.5}};
  b.radius = 0.02;
  b.half_length = 0.5;
  b.leaf_nodes = 65;
  const FoliationBox box = build_box(f, b);
  SamplerSpec s;
  s.samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(disintegrate(f, box, s, BinSpec{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Disintegrate)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_KanHolonomy(benchmark::State& state) {
  const KanMap m(0.25, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(center_holonomy(m, static_cast<int>(state.range(0)), 25));
}
BENCHMARK(BM_KanHolonomy)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_KanUlam(benchmark::State& state) {
  const KanMap m(0.25, 0.1);
  BoundaryMeasureOptions o;
  o.cells = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(boundary_measure(m, 1, o));
}
BENCHMARK(BM_KanUlam)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
