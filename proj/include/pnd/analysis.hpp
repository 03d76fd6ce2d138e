#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnd/photonstat.hpp"
#include "pnd/waveform.hpp"

namespace pnd {

// One photon-number state in the amplitude distribution.
struct Peak {
  int n = 0;
  double mean_mv = 0.0;
  double sigma_mv = 1.0;
  double weight = 0.0;
};

enum class WidthMode {
  kConstrained,  // sigma_N = sigma_1 * sqrt(N) for N >= 1, sigma_0 free
  kFree,         // every sigma_N free
};

struct MixtureModel {
  std::vector<Peak> peaks;  // peaks[i].n == i

  int n_max() const { return static_cast<int>(peaks.size()) - 1; }
  std::vector<double> weights() const;
  // Probability density of the mixture at v.
  double density(double v) const;
  // Throws std::invalid_argument if weights, ordering or widths are broken.
  void validate(WidthMode mode = WidthMode::kFree) const;
};

// Peaks at the given means with sigma_0 for N = 0 and sigma_1 * sqrt(N)
// otherwise, weighted by Poisson(mu) with the tail folded into the last peak.
MixtureModel poisson_mixture(std::span<const double> means, double sigma0, double sigma1, double mu);

struct FitOptions {
  int n_max = 4;
  WidthMode mode = WidthMode::kConstrained;
  int max_iterations = 400;
  // Starting peak spacing; 0 estimates it from the histogram's local maxima.
  double initial_gain_mv = 0.0;
  // Peaks expected to hold fewer counts than this raise a rank warning.
  double min_peak_counts = 100.0;

  bool operator==(const FitOptions&) const = default;
};

struct FitResult {
  MixtureModel model;
  double residual_norm = 0.0;  // sqrt of the weighted sum of squares
  int iterations = 0;
  bool valid = false;          // false when the iteration budget ran out
  // One-sigma statistical error of each mean, from the curvature at the
  // solution.
  std::vector<double> mean_stderr;
  std::vector<std::string> warnings;
};

// Weighted least squares of a Gaussian mixture to the normalized histogram.
// Each bin is compared as a probability integrated over the bin, with
// residuals scaled by 1/sqrt(max(count, 1)). Levenberg-Marquardt on ordered
// means, log widths and softmax weights.
FitResult fit_mixture(const AmplitudeHistogram& hist, const FitOptions& opts);

struct PoissonFit {
  double mu_det = 0.0;
  double residual = 0.0;  // root of the summed squared weight differences
};

// Detected flux whose Poisson weights best match the mixture weights. The top
// peak is compared with the Poisson tail mass at and above n_max.
PoissonFit poisson_consistency(const MixtureModel& model);

class NoCrossingError : public std::runtime_error {
 public:
  NoCrossingError(int lower_state, const std::string& what)
      : std::runtime_error(what), lower_state_(lower_state) {}
  int lower_state() const { return lower_state_; }

 private:
  int lower_state_;
};

// Crossing points of equal-weight adjacent peak densities for the pairs
// (0,1) ... (n_pairs-1, n_pairs); n_pairs < 0 means every adjacent pair.
// Throws NoCrossingError when a pair's densities do not cross between the
// two means.
std::vector<double> place_thresholds(const MixtureModel& model, int n_pairs = -1);

enum class TopBin {
  kOpen,    // last state collects everything above its lower threshold
  kClosed,  // last state ends at the next threshold
};

struct DiscriminationResult {
  std::vector<double> thresholds_mv;
  std::vector<double> errors;  // epsilon_N per state
};

// Probability that an N-photon amplitude lands outside bin N, from Gaussian
// tail integrals. n_states defaults to thresholds.size() + 1.
DiscriminationResult discrimination_errors(const MixtureModel& model, std::span<const double> thresholds,
                                           int n_states = -1, TopBin top = TopBin::kOpen);

// State assigned to amplitude v: the number of thresholds strictly below it.
int assign_state(double v, std::span<const double> thresholds, int n_states);

// <V^2> / <V>^2 of a sample, or 1 + (sigma / mean)^2 for a Gaussian peak.
double excess_noise(std::span<const double> amplitudes);
double excess_noise(const Peak& peak);

struct MonteCarloError {
  double rate = 0.0;
  double standard_error = 0.0;
  std::int64_t draws = 0;
};

// Misclassification frequency of `draws` samples from `peak` against the
// bin of state `state`.
MonteCarloError misclassification_oracle(const Peak& peak, std::span<const double> thresholds, int state,
                                         int n_states, TopBin top, std::int64_t draws, std::uint64_t seed);

}  // namespace pnd
