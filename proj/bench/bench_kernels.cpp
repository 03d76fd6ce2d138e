#include <benchmark/benchmark.h>

#include <limits>
#include <vector>

#include "pnd/kernels.hpp"
#include "pnd/waveform.hpp"

using namespace pnd;

namespace {

struct TraceFixture {
  DetectorConfig cfg;
  GateGeometry geom;
  std::vector<GateRecord> records;
  std::vector<double> amplitudes;
  std::vector<double> trace;

  explicit TraceFixture(std::int64_t gates) {
    cfg.illumination_divisor = 1;
    geom = gate_geometry(cfg, WaveformOptions{});
    records = simulate_run(cfg, PhotonFlux(1.0), gates, 1);
    for (const auto& r : records) amplitudes.push_back(r.amplitude_mv);
    trace.resize(records.size() * geom.period);
  }

  kernels::RenderParams render() const {
    kernels::RenderParams p;
    p.background = geom.feedthrough;
    p.pulse = geom.pulse;
    p.pulse_offset = geom.pulse_offset;
    p.noise_sigma = cfg.sigma_elec_mv;
    p.seed = 2;
    return p;
  }

  kernels::WindowParams window() const {
    return {geom.period, geom.window_begin, geom.window_length, geom.smooth_half, geom.smooth_gain};
  }
};

TraceFixture& fixture() {
  static TraceFixture f(1 << 15);
  return f;
}

template <auto Kernel>
void BM_render(benchmark::State& state) {
  auto& f = fixture();
  const auto p = f.render();
  for (auto _ : state) {
    Kernel(f.amplitudes, p, f.trace);
    benchmark::DoNotOptimize(f.trace.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.amplitudes.size()));
}

template <auto Kernel>
void BM_self_difference(benchmark::State& state) {
  auto& f = fixture();
  std::vector<double> out(f.trace.size() - f.geom.period);
  for (auto _ : state) {
    Kernel(f.trace, f.geom.period, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}

template <auto Kernel>
void BM_window_max(benchmark::State& state) {
  auto& f = fixture();
  const auto w = f.window();
  std::vector<double> out(kernels::measurable_gates(f.trace.size(), w));
  for (auto _ : state) {
    Kernel(f.trace, w, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}

template <auto Kernel>
void BM_misclassified(benchmark::State& state) {
  kernels::MisclassParams p;
  p.mean = 22.4;
  p.sigma = 6.7;
  p.lower = 10.0;
  p.upper = std::numeric_limits<double>::infinity();
  p.draws = 1 << 20;
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(p));
  state.SetItemsProcessed(state.iterations() * p.draws);
}

template <auto Kernel>
void BM_count_clicks(benchmark::State& state) {
  const DetectorConfig cfg;
  const std::int64_t gates = 1 << 20;
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(cfg, PhotonFlux(0.033), gates, 3));
  state.SetItemsProcessed(state.iterations() * gates);
}

}  // namespace

BENCHMARK(BM_render<kernels::serial::render_gates>)->Name("render/serial");
BENCHMARK(BM_render<kernels::omp::render_gates>)->Name("render/omp");
BENCHMARK(BM_self_difference<kernels::serial::self_difference>)->Name("self_difference/serial");
BENCHMARK(BM_self_difference<kernels::omp::self_difference>)->Name("self_difference/omp");
BENCHMARK(BM_window_max<kernels::serial::window_max>)->Name("window_max/serial");
BENCHMARK(BM_window_max<kernels::omp::window_max>)->Name("window_max/omp");
BENCHMARK(BM_misclassified<kernels::serial::count_misclassified>)->Name("misclassified/serial");
BENCHMARK(BM_misclassified<kernels::omp::count_misclassified>)->Name("misclassified/omp");
BENCHMARK(BM_count_clicks<kernels::serial::count_clicks_memoryless>)->Name("count_clicks/serial");
BENCHMARK(BM_count_clicks<kernels::omp::count_clicks_memoryless>)->Name("count_clicks/omp");

BENCHMARK_MAIN();
