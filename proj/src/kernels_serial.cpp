#include <stdexcept>

#include "kernels_detail.hpp"

namespace pnd::kernels {

std::size_t first_measurable_gate(const WindowParams& p) {
  if (p.smooth_half <= p.begin) return 0;
  return (p.smooth_half - p.begin + p.period - 1) / p.period;
}

std::size_t measurable_gates(std::size_t n_samples, const WindowParams& p) {
  const std::size_t first = first_measurable_gate(p);
  const std::size_t tail = p.begin + p.length + p.smooth_half;
  if (n_samples < tail) return 0;
  const std::size_t last_plus_one = (n_samples - tail) / p.period + 1;
  return last_plus_one > first ? last_plus_one - first : 0;
}

namespace serial {

void self_difference(std::span<const double> in, std::size_t period, std::span<double> out) {
  const std::size_t n = in.size() - period;
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i + period] - in[i];
}

void render_gates(std::span<const double> amplitudes, const RenderParams& p, std::span<double> out) {
  for (std::size_t g = 0; g < amplitudes.size(); ++g) detail::render_one_gate(g, amplitudes, p, out);
}

void window_max(std::span<const double> trace, const WindowParams& p, std::span<double> out) {
  const std::size_t first = first_measurable_gate(p);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::window_max_one(trace, p, first + i);
}

void add_readout_noise(std::span<const GateRecord> records, double sigma, std::uint64_t seed,
                       std::span<double> out) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    double v = records[i].amplitude_mv;
    if (sigma > 0.0) {
      Stream rng(seed, Domain::kReadout, static_cast<std::uint64_t>(records[i].gate_index));
      v += sigma * rng.normal();
    }
    out[i] = v;
  }
}

void fill_histogram(std::span<const double> values, Histogram1D& h) {
  const auto n = static_cast<std::int64_t>(h.counts.size());
  for (double v : values) {
    const std::int64_t b = detail::histogram_bin(v, h);
    if (b < 0) {
      ++h.underflow;
    } else if (b >= n) {
      ++h.overflow;
    } else {
      ++h.counts[static_cast<std::size_t>(b)];
    }
  }
}

std::int64_t count_misclassified(const MisclassParams& p) {
  const std::int64_t blocks = (p.draws + detail::kOracleBlock - 1) / detail::kOracleBlock;
  std::int64_t wrong = 0;
  for (std::int64_t b = 0; b < blocks; ++b) wrong += detail::misclassified_in_block(p, b);
  return wrong;
}

ClickTally count_clicks_memoryless(const DetectorConfig& cfg, PhotonFlux flux, std::int64_t n_gates,
                                   std::uint64_t seed) {
  if (cfg.trap_fill != 0.0) throw std::invalid_argument("count_clicks_memoryless: trap_fill must be 0");
  ClickTally t;
  for (std::int64_t g = 0; g < n_gates; ++g) t.add(detail::memoryless_gate(cfg, flux, g, seed));
  return t;
}

}  // namespace serial
}  // namespace pnd::kernels
