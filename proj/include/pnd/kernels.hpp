#pragma once

// Data-parallel inner loops. Each kernel exists as a plain serial reference
// and an OpenMP version with the same signature; tests require the two to
// agree bit for bit and bench/ compares their speed. All randomness is drawn
// from counter-based streams addressed by element index, so results do not
// depend on thread count or scheduling.

#include <cstdint>
#include <span>

#include "pnd/counting.hpp"
#include "pnd/detector.hpp"

namespace pnd::kernels {

struct RenderParams {
  std::span<const double> background;  // one gate period of feedthrough
  std::span<const double> pulse;        // unit-height avalanche pulse
  std::size_t pulse_offset = 0;         // first sample of the pulse in the period
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t first_gate = 0;         // gate index of out[0], addresses the noise streams
};

struct WindowParams {
  std::size_t period = 0;
  std::size_t begin = 0;       // window start within the period
  std::size_t length = 0;
  std::size_t smooth_half = 0; // boxcar half-width; 0 reads raw samples
  double smooth_gain = 1.0;    // boxcar response at the pulse peak
};

struct Histogram1D {
  std::span<std::int64_t> counts;
  double lo = 0.0;
  double width = 1.0;
  std::int64_t underflow = 0;
  std::int64_t overflow = 0;
};

// Draws from N(mean, sigma) and counts values outside (lower, upper]; use
// +-infinity for open ends.
struct MisclassParams {
  double mean = 0.0;
  double sigma = 1.0;
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t draws = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

namespace serial {
void self_difference(std::span<const double> in, std::size_t period, std::span<double> out);
void render_gates(std::span<const double> amplitudes, const RenderParams& p, std::span<double> out);
void window_max(std::span<const double> trace, const WindowParams& p, std::span<double> out);
void add_readout_noise(std::span<const GateRecord> records, double sigma, std::uint64_t seed,
                       std::span<double> out);
void fill_histogram(std::span<const double> values, Histogram1D& h);
std::int64_t count_misclassified(const MisclassParams& p);
ClickTally count_clicks_memoryless(const DetectorConfig& cfg, PhotonFlux flux, std::int64_t n_gates,
                                   std::uint64_t seed);
}  // namespace serial

namespace omp {
void self_difference(std::span<const double> in, std::size_t period, std::span<double> out);
void render_gates(std::span<const double> amplitudes, const RenderParams& p, std::span<double> out);
void window_max(std::span<const double> trace, const WindowParams& p, std::span<double> out);
void add_readout_noise(std::span<const GateRecord> records, double sigma, std::uint64_t seed,
                       std::span<double> out);
void fill_histogram(std::span<const double> values, Histogram1D& h);
std::int64_t count_misclassified(const MisclassParams& p);
ClickTally count_clicks_memoryless(const DetectorConfig& cfg, PhotonFlux flux, std::int64_t n_gates,
                                   std::uint64_t seed);
}  // namespace omp

// Number of gates whose window (plus smoothing margin) lies inside a trace of
// n samples that starts on a gate boundary.
std::size_t measurable_gates(std::size_t n_samples, const WindowParams& p);
// First gate with a full smoothing neighbourhood.
std::size_t first_measurable_gate(const WindowParams& p);

}  // namespace pnd::kernels
