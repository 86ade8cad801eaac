#include <benchmark/benchmark.h>

#include <random>

#include "rts/acoustics.hpp"
#include "rts/crossband.hpp"
#include "rts/dataset.hpp"
#include "rts/stft.hpp"

namespace {

constexpr double kFs = 16000.0;

rts::Signal noise(std::size_t n) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> dist;
  rts::Signal x(n);
  for (double& v : x) v = dist(gen);
  return x;
}

rts::Rir room(double t60, double duration) {
  return rts::synth_polack_rir(rts::PolackParams::with_drr(t60, duration, 0.0, 2, kFs), kFs);
}

void BM_Stft(benchmark::State& state) {
  const rts::Signal x = noise(static_cast<std::size_t>(state.range(0)));
  const rts::Stft engine;
  for (auto _ : state) benchmark::DoNotOptimize(engine.analyze(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Stft)->Arg(16000)->Arg(48000);

void BM_StftRoundTrip(benchmark::State& state) {
  const rts::Signal x = noise(48000);
  const rts::Stft engine;
  for (auto _ : state) benchmark::DoNotOptimize(engine.synthesize(engine.analyze(x)));
}
BENCHMARK(BM_StftRoundTrip);

void BM_Convolve(benchmark::State& state) {
  const rts::Signal x = noise(48000);
  const rts::Rir h = room(0.7, static_cast<double>(state.range(0)) / 1000.0);
  for (auto _ : state) benchmark::DoNotOptimize(rts::convolve(x, h));
}
BENCHMARK(BM_Convolve)->Arg(250)->Arg(1000);

void BM_Edc(benchmark::State& state) {
  const rts::Rir h = room(0.7, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(rts::estimate_t60(rts::schroeder_edc(h)));
}
BENCHMARK(BM_Edc);

void BM_CrossbandFilters(benchmark::State& state) {
  const rts::Rir h = room(0.5, 0.3);
  const rts::ProbeOptions options{0, 1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(rts::crossband_filters(h, rts::StftConfig{}, static_cast<std::size_t>(state.range(0)), options));
  }
}
BENCHMARK(BM_CrossbandFilters)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_CrossbandApply(benchmark::State& state) {
  const rts::StftConfig config;
  const auto filters = rts::crossband_filters(room(0.5, 0.3), config, 4);
  const auto spec = rts::stft(noise(48000), config);
  for (auto _ : state) benchmark::DoNotOptimize(rts::crossband_apply(spec, filters));
}
BENCHMARK(BM_CrossbandApply)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
