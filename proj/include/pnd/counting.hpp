#pragma once

#include <cstdint>
#include <span>

#include "pnd/detector.hpp"
#include "pnd/photonstat.hpp"

namespace pnd {

// Click counts of one run, split by whether the gate carried a laser pulse.
struct ClickTally {
  std::int64_t illuminated_gates = 0;
  std::int64_t illuminated_clicks = 0;
  std::int64_t other_gates = 0;
  std::int64_t other_clicks = 0;
  // Ground truth from the simulator, for diagnostics only.
  std::int64_t true_afterpulse_gates = 0;

  std::int64_t gates() const { return illuminated_gates + other_gates; }
  std::int64_t clicks() const { return illuminated_clicks + other_clicks; }
  void add(const GateRecord& r);
  ClickTally& operator+=(const ClickTally& o);
  bool operator==(const ClickTally&) const = default;
};

ClickTally tally_clicks(std::span<const GateRecord> records);

// Simulates a run and tallies clicks without storing records. Runs without
// trap memory have independent gates and go through the parallel kernel; the
// result is identical either way.
ClickTally count_clicks(const DetectorConfig& cfg, PhotonFlux flux, std::int64_t n_gates, std::uint64_t seed);

struct CountingSummary {
  double p_click_illuminated = 0.0;
  double p_click_dark = 0.0;
  double p_afterpulse = 0.0;
  double eta_est = 0.0;
  double mu_in = 0.0;
  // Set when the illuminated click probability does not exceed the dark one.
  bool degenerate = false;
};

// Counting estimators. The dark probability comes from a zero-flux companion
// run. Afterpulsing is the excess click rate in non-illuminated gates over
// the dark rate, per photon avalanche in the illuminated gates. Efficiency
// inverts p = 1 - (1 - p_dark) exp(-eta mu).
CountingSummary estimate_efficiency(const ClickTally& run, const ClickTally& dark_run, PhotonFlux mu_in);
CountingSummary estimate_efficiency(std::span<const GateRecord> run, std::span<const GateRecord> dark_run,
                                    PhotonFlux mu_in);

}  // namespace pnd
