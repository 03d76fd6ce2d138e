#include <omp.h>

#include <stdexcept>
#include <vector>

#include "kernels_detail.hpp"

namespace pnd::kernels::omp {

void self_difference(std::span<const double> in, std::size_t period, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(in.size() - period);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = in[i + period] - in[i];
}

void render_gates(std::span<const double> amplitudes, const RenderParams& p, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(amplitudes.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t g = 0; g < n; ++g) detail::render_one_gate(static_cast<std::size_t>(g), amplitudes, p, out);
}

void window_max(std::span<const double> trace, const WindowParams& p, std::span<double> out) {
  const std::size_t first = first_measurable_gate(p);
  const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = detail::window_max_one(trace, p, first + static_cast<std::size_t>(i));
}

void add_readout_noise(std::span<const GateRecord> records, double sigma, std::uint64_t seed,
                       std::span<double> out) {
  const auto n = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    double v = records[i].amplitude_mv;
    if (sigma > 0.0) {
      Stream rng(seed, Domain::kReadout, static_cast<std::uint64_t>(records[i].gate_index));
      v += sigma * rng.normal();
    }
    out[i] = v;
  }
}

void fill_histogram(std::span<const double> values, Histogram1D& h) {
  const std::size_t nbins = h.counts.size();
  const auto n = static_cast<std::int64_t>(values.size());
  std::int64_t under = 0;
  std::int64_t over = 0;
#pragma omp parallel reduction(+ : under, over)
  {
    std::vector<std::int64_t> local(nbins, 0);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t b = detail::histogram_bin(values[i], h);
      if (b < 0) {
        ++under;
      } else if (b >= static_cast<std::int64_t>(nbins)) {
        ++over;
      } else {
        ++local[static_cast<std::size_t>(b)];
      }
    }
#pragma omp critical(pnd_histogram_merge)
    for (std::size_t b = 0; b < nbins; ++b) h.counts[b] += local[b];
  }
  h.underflow += under;
  h.overflow += over;
}

std::int64_t count_misclassified(const MisclassParams& p) {
  const std::int64_t blocks = (p.draws + detail::kOracleBlock - 1) / detail::kOracleBlock;
  std::int64_t wrong = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : wrong)
  for (std::int64_t b = 0; b < blocks; ++b) wrong += detail::misclassified_in_block(p, b);
  return wrong;
}

ClickTally count_clicks_memoryless(const DetectorConfig& cfg, PhotonFlux flux, std::int64_t n_gates,
                                   std::uint64_t seed) {
  if (cfg.trap_fill != 0.0) throw std::invalid_argument("count_clicks_memoryless: trap_fill must be 0");
  std::int64_t lit_gates = 0, lit_clicks = 0, other_gates = 0, other_clicks = 0, afterpulses = 0;
#pragma omp parallel for schedule(static) reduction(+ : lit_gates, lit_clicks, other_gates, other_clicks, afterpulses)
  for (std::int64_t g = 0; g < n_gates; ++g) {
    const GateRecord r = detail::memoryless_gate(cfg, flux, g, seed);
    if (r.illuminated) {
      ++lit_gates;
      lit_clicks += r.clicked();
    } else {
      ++other_gates;
      other_clicks += r.clicked();
    }
    afterpulses += r.n_afterpulse > 0;
  }
  return {lit_gates, lit_clicks, other_gates, other_clicks, afterpulses};
}

}  // namespace pnd::kernels::omp
