#include "pnd/analysis.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pnd/kernels.hpp"

namespace pnd {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// P(Z <= u) and P(Z > u), each accurate deep in its own tail.
double lower_tail(double u) { return 0.5 * std::erfc(-u * kInvSqrt2); }
double upper_tail(double u) { return 0.5 * std::erfc(u * kInvSqrt2); }

double log_density(double v, const Peak& p) {
  const double u = (v - p.mean_mv) / p.sigma_mv;
  return -0.5 * u * u - std::log(p.sigma_mv);
}

struct Bin {
  double lower;
  double upper;
};

Bin state_bin(std::span<const double> thresholds, int state, int n_states, TopBin top) {
  const double inf = std::numeric_limits<double>::infinity();
  Bin b{state == 0 ? -inf : thresholds[static_cast<std::size_t>(state - 1)], inf};
  if (state < n_states - 1 || top == TopBin::kClosed) b.upper = thresholds[static_cast<std::size_t>(state)];
  return b;
}

void check_states(std::span<const double> thresholds, int n_states, TopBin top) {
  const auto needed = static_cast<std::size_t>(top == TopBin::kClosed ? n_states : n_states - 1);
  if (n_states < 1 || thresholds.size() < needed) {
    throw std::invalid_argument("discrimination: " + std::to_string(n_states) + " states need " +
                                std::to_string(needed) + " thresholds, got " + std::to_string(thresholds.size()));
  }
}

}  // namespace

std::vector<double> MixtureModel::weights() const {
  std::vector<double> w;
  for (const auto& p : peaks) w.push_back(p.weight);
  return w;
}

double MixtureModel::density(double v) const {
  double d = 0.0;
  for (const auto& p : peaks) {
    const double u = (v - p.mean_mv) / p.sigma_mv;
    d += p.weight * std::exp(-0.5 * u * u) / (p.sigma_mv * std::sqrt(2.0 * std::numbers::pi));
  }
  return d;
}

void MixtureModel::validate(WidthMode mode) const {
  if (peaks.empty()) throw std::invalid_argument("mixture: no peaks");
  double sum = 0.0;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const auto& p = peaks[i];
    if (p.n != static_cast<int>(i)) throw std::invalid_argument("mixture: peaks must be indexed 0..n_max");
    if (!(p.weight >= 0.0)) throw std::invalid_argument("mixture: negative weight");
    if (!(p.sigma_mv > 0.0)) throw std::invalid_argument("mixture: sigma must be > 0");
    if (i > 0 && !(p.mean_mv > peaks[i - 1].mean_mv)) {
      throw std::invalid_argument("mixture: means must increase with N");
    }
    if (mode == WidthMode::kConstrained && i > 1) {
      const double expect = peaks[1].sigma_mv * std::sqrt(static_cast<double>(i));
      if (std::abs(p.sigma_mv - expect) > 1e-9 * expect) {
        throw std::invalid_argument("mixture: sigma_N must equal sigma_1 * sqrt(N)");
      }
    }
    sum += p.weight;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("mixture: weights must sum to 1");
}

MixtureModel poisson_mixture(std::span<const double> means, double sigma0, double sigma1, double mu) {
  MixtureModel m;
  const int n_max = static_cast<int>(means.size()) - 1;
  for (int n = 0; n <= n_max; ++n) {
    const double w = n < n_max ? poisson_pmf(n, mu) : poisson_tail(n, mu);
    const double s = n == 0 ? sigma0 : sigma1 * std::sqrt(static_cast<double>(n));
    m.peaks.push_back({n, means[static_cast<std::size_t>(n)], s, w});
  }
  return m;
}

PoissonFit poisson_consistency(const MixtureModel& model) {
  model.validate();
  const int n_max = model.n_max();
  if (n_max < 1) throw std::invalid_argument("poisson_consistency: need at least two peaks");
  auto objective = [&](double mu) {
    double s = 0.0;
    for (int n = 0; n < n_max; ++n) {
      const double d = model.peaks[static_cast<std::size_t>(n)].weight - poisson_pmf(n, mu);
      s += d * d;
    }
    const double d = model.peaks.back().weight - poisson_tail(n_max, mu);
    return s + d * d;
  };
  double mean = 0.0;
  for (const auto& p : model.peaks) mean += p.n * p.weight;
  const double hi = 2.0 * mean + 10.0;
  const auto best = boost::math::tools::brent_find_minima(objective, 0.0, hi,
                                                          std::numeric_limits<double>::digits / 2 + 4);
  return {best.first, std::sqrt(std::max(0.0, best.second))};
}

std::vector<double> place_thresholds(const MixtureModel& model, int n_pairs) {
  if (model.peaks.size() < 2) throw std::invalid_argument("place_thresholds: need at least two peaks");
  const int available = model.n_max();
  const int pairs = n_pairs < 0 ? available : n_pairs;
  if (pairs > available) throw std::invalid_argument("place_thresholds: more pairs requested than peaks allow");

  std::vector<double> out;
  for (int n = 0; n < pairs; ++n) {
    const Peak& a = model.peaks[static_cast<std::size_t>(n)];
    const Peak& b = model.peaks[static_cast<std::size_t>(n + 1)];
    // Weights are replaced by equal ones, so only the unit-mass densities
    // compete.
    auto f = [&](double t) { return log_density(t, a) - log_density(t, b); };
    const double fa = f(a.mean_mv), fb = f(b.mean_mv);
    if (!(a.mean_mv < b.mean_mv) || !(fa > 0.0) || !(fb < 0.0)) {
      throw NoCrossingError(n, "no density crossing between peaks N=" + std::to_string(n) + " and N=" +
                                   std::to_string(n + 1));
    }
    std::uintmax_t max_iter = 200;
    auto tol = [](double x, double y) { return std::abs(x - y) < 1e-9; };
    const auto bracket = boost::math::tools::toms748_solve(f, a.mean_mv, b.mean_mv, fa, fb, tol, max_iter);
    out.push_back(0.5 * (bracket.first + bracket.second));
  }
  return out;
}

DiscriminationResult discrimination_errors(const MixtureModel& model, std::span<const double> thresholds,
                                           int n_states, TopBin top) {
  if (n_states < 0) n_states = static_cast<int>(thresholds.size()) + 1;
  check_states(thresholds, n_states, top);
  if (static_cast<int>(model.peaks.size()) < n_states) {
    throw std::invalid_argument("discrimination: model has fewer peaks than states");
  }
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > thresholds[i - 1])) throw std::invalid_argument("discrimination: thresholds must increase");
  }
  DiscriminationResult out;
  out.thresholds_mv.assign(thresholds.begin(), thresholds.end());
  for (int n = 0; n < n_states; ++n) {
    const Peak& p = model.peaks[static_cast<std::size_t>(n)];
    const Bin b = state_bin(thresholds, n, n_states, top);
    double e = 0.0;
    if (std::isfinite(b.lower)) e += lower_tail((b.lower - p.mean_mv) / p.sigma_mv);
    if (std::isfinite(b.upper)) e += upper_tail((b.upper - p.mean_mv) / p.sigma_mv);
    out.errors.push_back(std::min(1.0, e));
  }
  return out;
}

int assign_state(double v, std::span<const double> thresholds, int n_states) {
  int s = 0;
  while (s < n_states - 1 && s < static_cast<int>(thresholds.size()) && v > thresholds[static_cast<std::size_t>(s)]) {
    ++s;
  }
  return s;
}

double excess_noise(std::span<const double> amplitudes) {
  if (amplitudes.empty()) throw std::invalid_argument("excess_noise: empty sample");
  // Shifted accumulation keeps the second moment accurate for narrow peaks.
  const double shift = amplitudes.front();
  double s1 = 0.0, s2 = 0.0;
  for (double v : amplitudes) {
    const double d = v - shift;
    s1 += d;
    s2 += d * d;
  }
  const double n = static_cast<double>(amplitudes.size());
  const double mean = shift + s1 / n;
  if (mean == 0.0) throw std::invalid_argument("excess_noise: zero mean amplitude");
  const double var = s2 / n - (s1 / n) * (s1 / n);
  return 1.0 + std::max(0.0, var) / (mean * mean);
}

double excess_noise(const Peak& peak) {
  if (peak.mean_mv == 0.0) throw std::invalid_argument("excess_noise: zero mean amplitude");
  const double r = peak.sigma_mv / peak.mean_mv;
  return 1.0 + r * r;
}

MonteCarloError misclassification_oracle(const Peak& peak, std::span<const double> thresholds, int state,
                                         int n_states, TopBin top, std::int64_t draws, std::uint64_t seed) {
  check_states(thresholds, n_states, top);
  if (draws < 1) throw std::invalid_argument("misclassification_oracle: draws must be >= 1");
  const Bin b = state_bin(thresholds, state, n_states, top);
  kernels::MisclassParams p;
  p.mean = peak.mean_mv;
  p.sigma = peak.sigma_mv;
  p.lower = b.lower;
  p.upper = b.upper;
  p.draws = draws;
  p.seed = seed;
  p.stream = static_cast<std::uint64_t>(state);
  const std::int64_t wrong = kernels::omp::count_misclassified(p);
  MonteCarloError out;
  out.draws = draws;
  out.rate = static_cast<double>(wrong) / static_cast<double>(draws);
  out.standard_error = std::sqrt(std::max(out.rate * (1.0 - out.rate), 1.0 / static_cast<double>(draws)) /
                                 static_cast<double>(draws));
  return out;
}

}  // namespace pnd
