#include <benchmark/benchmark.h>

#include "cyclesim/distfit.hpp"
#include "cyclesim/kinematics.hpp"
#include "cyclesim/simcore.hpp"
#include "cyclesim/synth.hpp"
#include "cyclesim/trace_ingest.hpp"

using namespace cyclesim;

static void BM_FitBurr(benchmark::State& state) {
  Rng rng(1);
  const auto x = distfit::sample(distfit::BurrXII({3, 2, 1.5}), rng, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(distfit::fit_mle(x, distfit::Family::BurrXII));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitBurr)->Arg(1'000)->Arg(10'000)->Unit(benchmark::kMillisecond);

static void BM_FitJohnsonSU(benchmark::State& state) {
  Rng rng(2);
  const auto x = distfit::sample(distfit::JohnsonSU({-1, 2, 6, 2}), rng, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(distfit::fit_mle(x, distfit::Family::JohnsonSU));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitJohnsonSU)->Arg(1'000)->Arg(10'000)->Unit(benchmark::kMillisecond);

static void BM_SampleJohnsonSU(benchmark::State& state) {
  const distfit::Distribution d = distfit::JohnsonSU({-1, 2, 6, 2});
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(distfit::sample(d, rng, 100'000));
  state.SetItemsProcessed(state.iterations() * 100'000);
}
BENCHMARK(BM_SampleJohnsonSU)->Unit(benchmark::kMillisecond);

static void BM_GaussianSmooth(benchmark::State& state) {
  Rng rng(4);
  const auto ride = synth::generate_ride(synth::Profile::Realistic, rng, {}, "bench");
  for (auto _ : state) benchmark::DoNotOptimize(ingest::gaussian_kernel_smooth(ride.trace.points, 6.0));
  state.SetItemsProcessed(state.iterations() * ride.trace.points.size());
}
BENCHMARK(BM_GaussianSmooth)->Unit(benchmark::kMicrosecond);

static void BM_AnalyzeRide(benchmark::State& state) {
  Rng rng(5);
  const auto ride = synth::generate_ride(synth::Profile::Realistic, rng, {}, "bench");
  for (auto _ : state) benchmark::DoNotOptimize(kinematics::analyze_ride(ride.trace));
}
BENCHMARK(BM_AnalyzeRide)->Unit(benchmark::kMicrosecond);

static void BM_SimulateHour(benchmark::State& state) {
  sim::SimConfig cfg;
  cfg.duration = 3600;
  cfg.demand = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sim::run(sim::Scenario::default_four_way(), cfg));
}
BENCHMARK(BM_SimulateHour)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
