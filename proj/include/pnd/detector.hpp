#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pnd/photonstat.hpp"
#include "pnd/random.hpp"

namespace pnd {

// Electrical and statistical parameters of a gated APD.
struct DetectorConfig {
  double gate_frequency = 1e9;  // Hz
  double v_dc = 50.0;           // V
  double v_ac = 10.0;           // V
  double v_br = 41.7;           // V
  double qe = 0.81;
  double p_eta = 0.911;
  double gain_mv = 22.4;        // mean single-carrier avalanche amplitude
  double sigma_av_mv = 4.45;    // per-carrier avalanche spread, scales as sqrt(k)
  double sigma_elec_mv = 2.0;   // readout noise, applied at amplitude extraction
  double dark_prob = 1.1e-6;    // per gate
  double trap_fill = 0.0;       // mean traps filled per avalanche
  double trap_release_prob = 0.1;  // per gate, per occupied trap
  std::int64_t illumination_divisor = 64;
  double avalanche_duration_ps = 400.0;
  // Optional measured peak positions for k = 1, 2, ... carriers. Beyond the
  // table the last spacing is continued. Empty means k * gain_mv.
  std::vector<double> peak_means_mv;

  double gate_period_ps() const { return 1e12 / gate_frequency; }
  EfficiencyChain efficiency() const { return {qe, p_eta}; }
  // Mean avalanche amplitude for k >= 1 initiating carriers.
  double mean_amplitude(std::int64_t k) const;
  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool operator==(const DetectorConfig&) const = default;
};

struct GateRecord {
  std::int64_t gate_index = 0;
  bool illuminated = false;
  std::int64_t n_incident = 0;
  std::int64_t n_detected = 0;
  std::int64_t n_dark = 0;
  std::int64_t n_afterpulse = 0;
  double amplitude_mv = 0.0;

  std::int64_t carriers() const { return n_detected + n_dark + n_afterpulse; }
  bool clicked() const { return carriers() > 0; }
  bool operator==(const GateRecord&) const = default;
};

// Carriers held in deep levels after an avalanche. Each one is released
// independently with a fixed per-gate probability.
struct TrapState {
  std::int64_t occupied_traps = 0;
  bool operator==(const TrapState&) const = default;
};

// One gate: absorption, avalanche triggering, dark carrier, trap release,
// amplitude draw, trap refill.
std::pair<GateRecord, TrapState> simulate_gate(const DetectorConfig& cfg, TrapState traps,
                                               std::int64_t n_incident, Stream& rng);

// Photon number arriving at gate `gate_index`; zero unless the gate is
// illuminated. Shares the gate's stream and must be drawn first.
inline std::int64_t incident_photons(const DetectorConfig& cfg, PhotonFlux flux, std::int64_t gate_index,
                                     Stream& rng) {
  return gate_index % cfg.illumination_divisor == 0 ? sample_photon_number(flux, rng) : 0;
}

// Streams every gate of a run to `sink`. The trap population is a Markov
// chain, so gates are visited in order.
template <class Sink>
void for_each_gate(const DetectorConfig& cfg, PhotonFlux flux, std::int64_t n_gates, std::uint64_t seed,
                   Sink&& sink) {
  cfg.validate();
  TrapState traps;
  for (std::int64_t g = 0; g < n_gates; ++g) {
    Stream rng(seed, Domain::kGate, static_cast<std::uint64_t>(g));
    const std::int64_t n_inc = incident_photons(cfg, flux, g, rng);
    auto [record, next] = simulate_gate(cfg, traps, n_inc, rng);
    record.gate_index = g;
    record.illuminated = g % cfg.illumination_divisor == 0;
    traps = next;
    sink(record);
  }
}

std::vector<GateRecord> simulate_run(const DetectorConfig& cfg, PhotonFlux flux, std::int64_t n_gates,
                                     std::uint64_t seed);

// Bias dependence of the avalanche probability, dark probability and trap
// filling. Each map is monotone nondecreasing on [v_min, v_max].
struct BiasResponse {
  double v_min = 43.0;
  double v_max = 50.0;
  // p_eta(v) = 1 - exp(-p_eta_rate * (v - v_br))
  double p_eta_rate = 0.29146;
  // dark(v) = dark_at_max * exp(dark_slope * (v - v_max))
  double dark_at_max = 1.1e-6;
  double dark_slope = 0.8;
  // trap_fill(v) = 0 for v <= onset, rising exponentially to trap_fill_at_max.
  double trap_onset_v = 47.6;
  double trap_fill_at_max = 0.0;
  double trap_slope = 2.0;

  double p_eta(double v_dc, double v_br) const;
  double dark(double v_dc) const;
  double trap_fill(double v_dc) const;
  void validate() const;
  // Applies the maps at v_dc to a copy of cfg; throws if v_dc is outside
  // [v_min, v_max].
  DetectorConfig at(const DetectorConfig& cfg, double v_dc) const;

  bool operator==(const BiasResponse&) const = default;
};

struct BiasPoint {
  double v_dc = 0.0;
  double eta_est = 0.0;
  double dark_est = 0.0;
  double afterpulse_est = 0.0;
};

// Counting measurement at each bias: an illuminated run plus a zero-flux
// companion run of dark_gates gates. Points are independent and run
// concurrently up to `jobs` threads; results do not depend on scheduling.
std::vector<BiasPoint> bias_sweep(const BiasResponse& resp, const DetectorConfig& cfg,
                                  const std::vector<double>& v_dc_list, PhotonFlux flux, std::int64_t n_gates,
                                  std::int64_t dark_gates, std::uint64_t seed, int jobs = 1);

// Trap filling that yields `afterpulse_prob` afterpulses per photon avalanche
// within one illumination period. Treats the cascade as a branching process
// with per-generation mean fill * P(release within divisor - 1 gates) and
// ignores coincident releases.
double calibrate_trap_fill(double afterpulse_prob, double release_prob, std::int64_t divisor);

}  // namespace pnd
