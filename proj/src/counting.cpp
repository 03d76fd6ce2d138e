#include "pnd/counting.hpp"

#include <cmath>
#include <stdexcept>

#include "pnd/kernels.hpp"

namespace pnd {

void ClickTally::add(const GateRecord& r) {
  if (r.illuminated) {
    ++illuminated_gates;
    illuminated_clicks += r.clicked();
  } else {
    ++other_gates;
    other_clicks += r.clicked();
  }
  true_afterpulse_gates += r.n_afterpulse > 0;
}

ClickTally& ClickTally::operator+=(const ClickTally& o) {
  illuminated_gates += o.illuminated_gates;
  illuminated_clicks += o.illuminated_clicks;
  other_gates += o.other_gates;
  other_clicks += o.other_clicks;
  true_afterpulse_gates += o.true_afterpulse_gates;
  return *this;
}

ClickTally tally_clicks(std::span<const GateRecord> records) {
  ClickTally t;
  for (const auto& r : records) t.add(r);
  return t;
}

ClickTally count_clicks(const DetectorConfig& cfg, PhotonFlux flux, std::int64_t n_gates, std::uint64_t seed) {
  cfg.validate();
  if (n_gates < 1) throw std::invalid_argument("count_clicks: n_gates must be >= 1");
  if (cfg.trap_fill == 0.0) return kernels::omp::count_clicks_memoryless(cfg, flux, n_gates, seed);
  ClickTally t;
  for_each_gate(cfg, flux, n_gates, seed, [&](const GateRecord& r) { t.add(r); });
  return t;
}

CountingSummary estimate_efficiency(const ClickTally& run, const ClickTally& dark_run, PhotonFlux mu_in) {
  CountingSummary s;
  s.mu_in = mu_in.mu();
  if (dark_run.gates() > 0) {
    s.p_click_dark = static_cast<double>(dark_run.clicks()) / static_cast<double>(dark_run.gates());
  }
  if (run.illuminated_gates > 0) {
    s.p_click_illuminated =
        static_cast<double>(run.illuminated_clicks) / static_cast<double>(run.illuminated_gates);
  }

  if (s.mu_in <= 0.0 || run.illuminated_gates == 0 || s.p_click_illuminated <= s.p_click_dark) {
    s.degenerate = true;
    s.eta_est = 0.0;
  } else {
    s.eta_est = -std::log((1.0 - s.p_click_illuminated) / (1.0 - s.p_click_dark)) / s.mu_in;
    s.eta_est = std::clamp(s.eta_est, 0.0, 1.0);
  }

  const double photon_clicks =
      static_cast<double>(run.illuminated_clicks) - s.p_click_dark * static_cast<double>(run.illuminated_gates);
  if (photon_clicks > 0.0) {
    const double excess =
        static_cast<double>(run.other_clicks) - s.p_click_dark * static_cast<double>(run.other_gates);
    s.p_afterpulse = std::clamp(excess / photon_clicks, 0.0, 1.0);
  }
  return s;
}

CountingSummary estimate_efficiency(std::span<const GateRecord> run, std::span<const GateRecord> dark_run,
                                    PhotonFlux mu_in) {
  return estimate_efficiency(tally_clicks(run), tally_clicks(dark_run), mu_in);
}

}  // namespace pnd
