#pragma once

// Per-element bodies shared by the serial and OpenMP kernels.

#include <cmath>
#include <cstdint>
#include <span>

#include "pnd/kernels.hpp"
#include "pnd/random.hpp"

namespace pnd::kernels::detail {

constexpr std::int64_t kOracleBlock = 1 << 16;

inline void render_one_gate(std::size_t g, std::span<const double> amplitudes, const RenderParams& p,
                            std::span<double> out) {
  const std::size_t period = p.background.size();
  double* dst = out.data() + g * period;
  for (std::size_t j = 0; j < period; ++j) dst[j] = p.background[j];
  const double a = amplitudes[g];
  if (a != 0.0) {
    for (std::size_t j = 0; j < p.pulse.size(); ++j) dst[p.pulse_offset + j] += a * p.pulse[j];
  }
  if (p.noise_sigma > 0.0) {
    Stream rng(p.seed, Domain::kTraceNoise, p.first_gate + g);
    for (std::size_t j = 0; j < period; ++j) dst[j] += p.noise_sigma * rng.normal();
  }
}

inline double window_max_one(std::span<const double> trace, const WindowParams& p, std::size_t gate) {
  const std::size_t start = gate * p.period + p.begin;
  double best = -INFINITY;
  if (p.smooth_half == 0) {
    for (std::size_t j = 0; j < p.length; ++j) best = std::max(best, trace[start + j]);
    return best;
  }
  const std::size_t width = 2 * p.smooth_half + 1;
  const double scale = 1.0 / (static_cast<double>(width) * p.smooth_gain);
  for (std::size_t j = 0; j < p.length; ++j) {
    const std::size_t c = start + j;
    double sum = 0.0;
    for (std::size_t i = c - p.smooth_half; i <= c + p.smooth_half; ++i) sum += trace[i];
    best = std::max(best, sum * scale);
  }
  return best;
}

inline std::int64_t histogram_bin(double v, const Histogram1D& h) {
  const double x = (v - h.lo) / h.width;
  if (!(x >= 0.0)) return -1;
  const double n = static_cast<double>(h.counts.size());
  if (x >= n) return static_cast<std::int64_t>(h.counts.size());
  return static_cast<std::int64_t>(x);
}

inline std::int64_t misclassified_in_block(const MisclassParams& p, std::int64_t block) {
  const std::int64_t begin = block * kOracleBlock;
  const std::int64_t end = std::min(p.draws, begin + kOracleBlock);
  Stream rng(p.seed, Domain::kOracle, (p.stream << 32) | static_cast<std::uint64_t>(block));
  std::int64_t wrong = 0;
  for (std::int64_t i = begin; i < end; ++i) {
    const double v = p.mean + p.sigma * rng.normal();
    wrong += !(v > p.lower && v <= p.upper);
  }
  return wrong;
}

inline GateRecord memoryless_gate(const DetectorConfig& cfg, PhotonFlux flux, std::int64_t g,
                                  std::uint64_t seed) {
  Stream rng(seed, Domain::kGate, static_cast<std::uint64_t>(g));
  const std::int64_t n_inc = incident_photons(cfg, flux, g, rng);
  GateRecord rec = simulate_gate(cfg, TrapState{}, n_inc, rng).first;
  rec.gate_index = g;
  rec.illuminated = g % cfg.illumination_divisor == 0;
  return rec;
}

}  // namespace pnd::kernels::detail
