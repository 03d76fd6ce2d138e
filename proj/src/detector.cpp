#include "pnd/detector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pnd/counting.hpp"

namespace pnd {
namespace {

void check(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw std::invalid_argument("detector." + field + ": " + rule);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

double DetectorConfig::mean_amplitude(std::int64_t k) const {
  if (k <= 0) return 0.0;
  const auto n = static_cast<std::int64_t>(peak_means_mv.size());
  if (n == 0) return static_cast<double>(k) * gain_mv;
  if (k <= n) return peak_means_mv[static_cast<std::size_t>(k - 1)];
  const double last = peak_means_mv.back();
  const double spacing = n >= 2 ? last - peak_means_mv[static_cast<std::size_t>(n - 2)] : last;
  return last + static_cast<double>(k - n) * spacing;
}

void DetectorConfig::validate() const {
  check(gate_frequency > 0.0 && std::isfinite(gate_frequency), "gate_frequency", "must be > 0");
  check(is_probability(qe), "qe", "must lie in [0, 1]");
  check(is_probability(p_eta), "p_eta", "must lie in [0, 1]");
  check(is_probability(dark_prob), "dark_prob", "must lie in [0, 1]");
  check(is_probability(trap_release_prob), "trap_release_prob", "must lie in [0, 1]");
  check(gain_mv > 0.0, "gain_mv", "must be > 0");
  check(sigma_av_mv >= 0.0, "sigma_av_mv", "must be >= 0");
  check(sigma_elec_mv >= 0.0, "sigma_elec_mv", "must be >= 0");
  check(trap_fill >= 0.0 && std::isfinite(trap_fill), "trap_fill", "must be >= 0");
  check(illumination_divisor >= 1, "illumination_divisor", "must be >= 1");
  check(avalanche_duration_ps > 0.0 && avalanche_duration_ps < gate_period_ps(), "avalanche_duration_ps",
        "must be positive and shorter than the gate period");
  for (std::size_t i = 0; i < peak_means_mv.size(); ++i) {
    const double lower = i == 0 ? 0.0 : peak_means_mv[i - 1];
    check(peak_means_mv[i] > lower, "peak_means_mv", "must be positive and strictly increasing");
  }
}

std::pair<GateRecord, TrapState> simulate_gate(const DetectorConfig& cfg, TrapState traps,
                                               std::int64_t n_incident, Stream& rng) {
  GateRecord rec;
  rec.n_incident = n_incident;
  rec.n_detected = thin(thin(n_incident, cfg.qe, rng), cfg.p_eta, rng);
  rec.n_dark = rng.bernoulli(cfg.dark_prob) ? 1 : 0;
  if (traps.occupied_traps > 0) {
    rec.n_afterpulse = thin(traps.occupied_traps, cfg.trap_release_prob, rng);
    traps.occupied_traps -= rec.n_afterpulse;
  }

  const std::int64_t k = rec.carriers();
  if (k == 0) return {rec, traps};

  const double mean = cfg.mean_amplitude(k);
  const double sigma = cfg.sigma_av_mv * std::sqrt(static_cast<double>(k));
  double amplitude = mean;
  if (sigma > 0.0) {
    // Resample the negative tail; mean > 0 so this terminates quickly.
    do {
      amplitude = mean + sigma * rng.normal();
    } while (amplitude < 0.0);
  }
  rec.amplitude_mv = amplitude;
  traps.occupied_traps += sample_poisson(cfg.trap_fill, rng);
  return {rec, traps};
}

std::vector<GateRecord> simulate_run(const DetectorConfig& cfg, PhotonFlux flux, std::int64_t n_gates,
                                     std::uint64_t seed) {
  if (n_gates < 1) throw std::invalid_argument("simulate_run: n_gates must be >= 1");
  std::vector<GateRecord> out;
  out.reserve(static_cast<std::size_t>(n_gates));
  for_each_gate(cfg, flux, n_gates, seed, [&](const GateRecord& r) { out.push_back(r); });
  return out;
}

double BiasResponse::p_eta(double v_dc, double v_br) const {
  return std::max(0.0, 1.0 - std::exp(-p_eta_rate * (v_dc - v_br)));
}

double BiasResponse::dark(double v_dc) const { return dark_at_max * std::exp(dark_slope * (v_dc - v_max)); }

double BiasResponse::trap_fill(double v_dc) const {
  if (v_dc <= trap_onset_v || trap_fill_at_max == 0.0) return 0.0;
  const double span = std::expm1(trap_slope * (v_max - trap_onset_v));
  return trap_fill_at_max * std::expm1(trap_slope * (v_dc - trap_onset_v)) / span;
}

void BiasResponse::validate() const {
  auto fail = [](const std::string& field, const std::string& rule) {
    throw std::invalid_argument("bias_response." + field + ": " + rule);
  };
  if (!(v_max > v_min)) fail("v_max", "must exceed v_min");
  if (!(p_eta_rate >= 0.0)) fail("p_eta_rate", "must be >= 0");
  if (!(dark_at_max >= 0.0 && dark_at_max <= 1.0)) fail("dark_at_max", "must lie in [0, 1]");
  if (!(dark_slope >= 0.0)) fail("dark_slope", "must be >= 0");
  if (!(trap_fill_at_max >= 0.0)) fail("trap_fill_at_max", "must be >= 0");
  if (!(trap_slope > 0.0)) fail("trap_slope", "must be > 0");
  if (!(trap_onset_v < v_max)) fail("trap_onset_v", "must be below v_max");
}

DetectorConfig BiasResponse::at(const DetectorConfig& cfg, double v_dc) const {
  if (!(v_dc >= v_min && v_dc <= v_max)) {
    throw std::invalid_argument("bias " + std::to_string(v_dc) + " V outside modeled range [" +
                                std::to_string(v_min) + ", " + std::to_string(v_max) + "]");
  }
  DetectorConfig out = cfg;
  out.v_dc = v_dc;
  out.p_eta = p_eta(v_dc, cfg.v_br);
  out.dark_prob = dark(v_dc);
  out.trap_fill = trap_fill(v_dc);
  return out;
}

std::vector<BiasPoint> bias_sweep(const BiasResponse& resp, const DetectorConfig& cfg,
                                  const std::vector<double>& v_dc_list, PhotonFlux flux, std::int64_t n_gates,
                                  std::int64_t dark_gates, std::uint64_t seed, int jobs) {
  if (v_dc_list.empty()) throw std::invalid_argument("bias_sweep: empty bias list");
  if (n_gates < 1 || dark_gates < 1) throw std::invalid_argument("bias_sweep: gate counts must be >= 1");
  resp.validate();
  std::vector<DetectorConfig> configs;
  for (double v : v_dc_list) {
    configs.push_back(resp.at(cfg, v));
    configs.back().validate();
  }

  // Every point reuses the same streams (common random numbers), so the
  // sweep noise is correlated along the bias axis.
  const std::uint64_t lit_seed = derive_seed(seed, 1);
  const std::uint64_t dark_seed = derive_seed(seed, 2);
  std::vector<BiasPoint> out(configs.size());
  const auto n_points = static_cast<std::int64_t>(configs.size());
#pragma omp parallel for num_threads(std::max(1, jobs)) schedule(dynamic)
  for (std::int64_t i = 0; i < n_points; ++i) {
    const auto& c = configs[static_cast<std::size_t>(i)];
    const ClickTally lit = count_clicks(c, flux, n_gates, lit_seed);
    const ClickTally dark = count_clicks(c, PhotonFlux(0.0), dark_gates, dark_seed);
    const CountingSummary s = estimate_efficiency(lit, dark, flux);
    out[static_cast<std::size_t>(i)] = {c.v_dc, s.eta_est, s.p_click_dark, s.p_afterpulse};
  }
  return out;
}

double calibrate_trap_fill(double afterpulse_prob, double release_prob, std::int64_t divisor) {
  if (!(afterpulse_prob >= 0.0)) throw std::invalid_argument("calibrate_trap_fill: negative target");
  if (!(release_prob > 0.0 && release_prob <= 1.0)) {
    throw std::invalid_argument("calibrate_trap_fill: release probability must lie in (0, 1]");
  }
  if (divisor < 2) throw std::invalid_argument("calibrate_trap_fill: divisor must be >= 2");
  const double released_in_window = 1.0 - std::pow(1.0 - release_prob, static_cast<double>(divisor - 1));
  // A = m / (1 - m) for a subcritical cascade with offspring mean m.
  const double offspring = afterpulse_prob / (1.0 + afterpulse_prob);
  return offspring / released_in_window;
}

}  // namespace pnd
