#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "pnd/kernels.hpp"
#include "pnd/waveform.hpp"

namespace pnd {
namespace {

// The parallel kernels must reproduce the serial reference bit for bit.

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Stream s(seed, Domain::kSampling, 0);
  std::vector<double> v(n);
  for (auto& x : v) x = 10.0 * s.normal();
  return v;
}

TEST(Kernels, SelfDifference) {
  const auto in = noise(100000, 1);
  std::vector<double> a(in.size() - 64), b(in.size() - 64);
  kernels::serial::self_difference(in, 64, a);
  kernels::omp::self_difference(in, 64, b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[5], in[69] - in[5]);
}

TEST(Kernels, RenderAndWindow) {
  DetectorConfig cfg;
  const WaveformOptions opts;
  const GateGeometry g = gate_geometry(cfg, opts);
  const auto records = simulate_run(cfg, PhotonFlux(1.0), 4000, 2);
  std::vector<double> amps;
  for (const auto& r : records) amps.push_back(r.amplitude_mv);

  kernels::RenderParams p;
  p.background = g.feedthrough;
  p.pulse = g.pulse;
  p.pulse_offset = g.pulse_offset;
  p.noise_sigma = 2.0;
  p.seed = 3;
  p.first_gate = 1000;
  std::vector<double> a(amps.size() * g.period), b(a.size());
  kernels::serial::render_gates(amps, p, a);
  kernels::omp::render_gates(amps, p, b);
  ASSERT_EQ(a, b);

  const kernels::WindowParams w{g.period, g.window_begin, g.window_length, g.smooth_half, g.smooth_gain};
  const std::size_t n = kernels::measurable_gates(a.size(), w);
  ASSERT_GT(n, 3990u);
  std::vector<double> ma(n), mb(n);
  kernels::serial::window_max(a, w, ma);
  kernels::omp::window_max(a, w, mb);
  EXPECT_EQ(ma, mb);
}

TEST(Kernels, ReadoutNoise) {
  const auto records = simulate_run(DetectorConfig{}, PhotonFlux(2.0), 50000, 4);
  std::vector<double> a(records.size()), b(records.size());
  kernels::serial::add_readout_noise(records, 2.0, 5, a);
  kernels::omp::add_readout_noise(records, 2.0, 5, b);
  EXPECT_EQ(a, b);
}

TEST(Kernels, FillHistogram) {
  const auto values = noise(300000, 6);
  std::vector<std::int64_t> ca(40), cb(40);
  kernels::Histogram1D ha{ca, -10.0, 0.5};
  kernels::Histogram1D hb{cb, -10.0, 0.5};
  kernels::serial::fill_histogram(values, ha);
  kernels::omp::fill_histogram(values, hb);
  EXPECT_EQ(ca, cb);
  EXPECT_EQ(ha.underflow, hb.underflow);
  EXPECT_EQ(ha.overflow, hb.overflow);
  std::int64_t total = ha.underflow + ha.overflow;
  for (auto c : ca) total += c;
  EXPECT_EQ(total, static_cast<std::int64_t>(values.size()));
}

TEST(Kernels, CountMisclassified) {
  kernels::MisclassParams p;
  p.mean = 22.4;
  p.sigma = 6.0;
  p.lower = 11.0;
  p.upper = std::numeric_limits<double>::infinity();
  p.draws = 1000003;
  p.seed = 8;
  p.stream = 1;
  const auto a = kernels::serial::count_misclassified(p);
  EXPECT_EQ(a, kernels::omp::count_misclassified(p));
  const double expect = 0.5 * std::erfc((22.4 - 11.0) / 6.0 / std::sqrt(2.0));
  EXPECT_NEAR(static_cast<double>(a) / static_cast<double>(p.draws), expect,
              4.0 * std::sqrt(expect / static_cast<double>(p.draws)));
}

TEST(Kernels, CountClicksMemoryless) {
  DetectorConfig cfg;
  cfg.dark_prob = 1e-3;
  const auto a = kernels::serial::count_clicks_memoryless(cfg, PhotonFlux(0.2), 500000, 9);
  EXPECT_EQ(a, kernels::omp::count_clicks_memoryless(cfg, PhotonFlux(0.2), 500000, 9));
  EXPECT_EQ(a, tally_clicks(simulate_run(cfg, PhotonFlux(0.2), 500000, 9)));
}

}  // namespace
}  // namespace pnd
