#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pnd/detector.hpp"

namespace pnd {

// Uniformly sampled voltage record in mV. start_time must fall on a gate
// boundary for amplitude extraction.
struct WaveformTrace {
  double sample_rate = 0.0;  // samples per second
  double start_time = 0.0;   // seconds
  std::vector<double> samples;
};

struct WaveformOptions {
  std::int64_t samples_per_gate = 64;
  // Capacitive feedthrough: a differentiated square wave with Gaussian edges.
  double feedthrough_mv = 400.0;
  double feedthrough_edge_ps = 30.0;
  // Boxcar applied before the window maximum, in samples (odd; 1 = none).
  std::int64_t smoothing_samples = 7;

  void validate(const DetectorConfig& cfg) const;
  bool operator==(const WaveformOptions&) const = default;
};

// Sampled shapes derived from a config: one period of feedthrough, the unit
// avalanche pulse and the measurement window.
struct GateGeometry {
  std::size_t period = 0;
  std::vector<double> feedthrough;
  std::vector<double> pulse;  // raised cosine, exactly 1 at its centre
  std::size_t pulse_offset = 0;
  std::size_t pulse_center = 0;
  std::size_t window_begin = 0;
  std::size_t window_length = 0;
  std::size_t smooth_half = 0;
  double smooth_gain = 1.0;
};

GateGeometry gate_geometry(const DetectorConfig& cfg, const WaveformOptions& opts);

// Raw detector output for a run of consecutive gates: periodic feedthrough,
// one avalanche pulse per non-empty gate, white noise of sigma_elec_mv.
WaveformTrace synthesize_trace(std::span<const GateRecord> records, const DetectorConfig& cfg,
                               const WaveformOptions& opts, std::uint64_t seed);

// out[i] = in[i + period] - in[i]; the output starts one period later.
WaveformTrace self_difference(const WaveformTrace& trace, std::int64_t period_samples);

struct GateAmplitude {
  std::int64_t gate_index = 0;
  double amplitude_mv = 0.0;
};

// Signed maximum of the (smoothed) trace inside each gate's measurement
// window. Gates without a full window in the trace are skipped.
std::vector<GateAmplitude> extract_amplitudes(const WaveformTrace& trace, const DetectorConfig& cfg,
                                              const WaveformOptions& opts);

// Full synthesize -> difference -> extract pipeline, processed in chunks that
// overlap by one period. Equivalent to running the stages on the whole run.
std::vector<GateAmplitude> trace_amplitudes(std::span<const GateRecord> records, const DetectorConfig& cfg,
                                            const WaveformOptions& opts, std::uint64_t seed,
                                            std::int64_t chunk_gates = 8192);

// Shortcut readout: record amplitude plus Gaussian noise of sigma_elec_mv.
// Optionally keeps only illuminated gates.
std::vector<double> readout_amplitudes(std::span<const GateRecord> records, const DetectorConfig& cfg,
                                       std::uint64_t seed, bool illuminated_only);

struct AmplitudeHistogram {
  std::vector<double> bin_edges;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;  // sum of counts
  std::int64_t underflow = 0;
  std::int64_t overflow = 0;

  std::size_t bins() const { return counts.size(); }
  double center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
  double probability(std::size_t i) const {
    return total > 0 ? static_cast<double>(counts[i]) / static_cast<double>(total) : 0.0;
  }
};

struct HistogramRange {
  double bin_width_mv = 0.5;
  double lo_mv = -5.0;
  double hi_mv = 110.0;
  bool operator==(const HistogramRange&) const = default;
};

AmplitudeHistogram empty_histogram(const HistogramRange& range);
// Bins are [left, right); values outside the range go to under/overflow.
AmplitudeHistogram build_histogram(std::span<const double> amplitudes, const HistogramRange& range);
void accumulate(AmplitudeHistogram& hist, std::span<const double> amplitudes);

// Columnar text. Lines starting with '#' are comments; `header` lines are
// written as comments first.
void write_trace(std::ostream& os, const WaveformTrace& trace, const std::string& header = {});
WaveformTrace read_trace(std::istream& is);
void write_histogram(std::ostream& os, const AmplitudeHistogram& hist, const std::string& header = {});
// Throws std::runtime_error naming the first malformed row.
AmplitudeHistogram read_histogram(std::istream& is);

}  // namespace pnd
