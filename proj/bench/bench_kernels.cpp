// Serial reference kernels against their OpenMP versions, plus one full tracker step.

#include <benchmark/benchmark.h>

#include <random>

#include "saltrk/dataset.hpp"
#include "saltrk/kernels.hpp"
#include "saltrk/tracker.hpp"

using namespace saltrk;

namespace {

Grid random_grid(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Grid g(w, h);
  for (double& v : g.values()) v = u(rng);
  return g;
}

template <Grid (*Fn)(const Grid&, const Grid&)>
void BM_correlate(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Grid map = random_grid(side, side, 1), filter = random_grid(side / 5, side / 5, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(map, filter));
  state.SetItemsProcessed(state.iterations() * side * side);
}

template <Grid (*Fn)(const Grid&, double, double, kernels::Boundary)>
void BM_smooth(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Grid g = random_grid(side, side, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(g, 9.0, 4.0, kernels::Boundary::Clip));
  state.SetItemsProcessed(state.iterations() * side * side);
}

template <Grid (*Fn)(std::span<const Grid>, int, int)>
void BM_max_abs(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  std::vector<Grid> grids;
  for (int i = 0; i < 60; ++i) grids.push_back(random_grid(side, side, 10 + i));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(grids, side, side));
  state.SetItemsProcessed(state.iterations() * side * side * 60);
}

void BM_tracker_step(benchmark::State& state) {
  SynthConfig cfg;
  cfg.length = 40;
  cfg.path = {{0, 1.0, 0.5}};
  const SyntheticSequence seq = synth_sequence(cfg);
  LoadedNetwork ln = make_handcrafted_network();
  TrackerSession session(FeatureNet(ln.spec, ln.weights), TrackerConfig{});
  session.initialize(seq.frames[0], seq.ground_truth[0]);
  std::size_t i = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(session.step(seq.frames[i]));
    if (++i == seq.frames.size()) {
      state.PauseTiming();
      session.initialize(seq.frames[0], seq.ground_truth[0]);
      i = 1;
      state.ResumeTiming();
    }
  }
}

}  // namespace

BENCHMARK(BM_correlate<kernels::correlate_serial>)->Arg(64)->Arg(128);
BENCHMARK(BM_correlate<kernels::correlate_parallel>)->Arg(64)->Arg(128);
BENCHMARK(BM_smooth<kernels::smooth_serial>)->Arg(64)->Arg(256);
BENCHMARK(BM_smooth<kernels::smooth_parallel>)->Arg(64)->Arg(256);
BENCHMARK(BM_max_abs<kernels::max_abs_serial>)->Arg(64)->Arg(256);
BENCHMARK(BM_max_abs<kernels::max_abs_parallel>)->Arg(64)->Arg(256);
BENCHMARK(BM_tracker_step)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
