#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pnd/analysis.hpp"

namespace pnd {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
// Soft tie between neighbouring log spacings (N >= 2). Weak enough that a
// peak with ~1e4 counts overrides it; strong enough that an empty peak
// follows the grid instead of sliding under a populated neighbour.
constexpr double kSpacingTie = 0.05;

// Gaussian mass between two standardized edges, accurate in both tails.
double mass_between(double u0, double u1) {
  if (u0 > 0.0) return 0.5 * (std::erfc(u0 * kInvSqrt2) - std::erfc(u1 * kInvSqrt2));
  if (u1 < 0.0) return 0.5 * (std::erfc(-u1 * kInvSqrt2) - std::erfc(-u0 * kInvSqrt2));
  return 1.0 - 0.5 * std::erfc(-u0 * kInvSqrt2) - 0.5 * std::erfc(u1 * kInvSqrt2);
}

double phi(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

// Parameter vector layout: [m0, log spacing_1..n, log sigma..., z_0..z_n].
struct Layout {
  int n_peaks;
  int n_sigmas;
  int mean0() const { return 0; }
  int spacing(int n) const { return n; }  // n >= 1
  int sigma(int k) const { return n_peaks + k; }
  int z(int n) const { return n_peaks + n_sigmas + n; }
  int size() const { return 2 * n_peaks + n_sigmas; }
};

struct Unpacked {
  std::vector<double> mean, sigma, weight;
};

Unpacked unpack(const Eigen::VectorXd& th, const Layout& L, WidthMode mode) {
  Unpacked u;
  u.mean.resize(L.n_peaks);
  u.sigma.resize(L.n_peaks);
  u.weight.resize(L.n_peaks);
  u.mean[0] = th[L.mean0()];
  for (int n = 1; n < L.n_peaks; ++n) u.mean[n] = u.mean[n - 1] + std::exp(th[L.spacing(n)]);
  for (int n = 0; n < L.n_peaks; ++n) {
    if (mode == WidthMode::kFree) {
      u.sigma[n] = std::exp(th[L.sigma(n)]);
    } else {
      u.sigma[n] = n == 0 ? std::exp(th[L.sigma(0)]) : std::exp(th[L.sigma(1)]) * std::sqrt(double(n));
    }
  }
  double zmax = -INFINITY;
  for (int n = 0; n < L.n_peaks; ++n) zmax = std::max(zmax, th[L.z(n)]);
  double sum = 0.0;
  for (int n = 0; n < L.n_peaks; ++n) sum += (u.weight[n] = std::exp(th[L.z(n)] - zmax));
  for (auto& w : u.weight) w /= sum;
  return u;
}

class Problem {
 public:
  Problem(const AmplitudeHistogram& h, Layout L, WidthMode mode) : h_(h), L_(L), mode_(mode) {
    const auto nb = static_cast<Eigen::Index>(h.bins());
    counts_.resize(nb);
    inv_sd_.resize(nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
      counts_[i] = static_cast<double>(h.counts[static_cast<std::size_t>(i)]);
      inv_sd_[i] = 1.0 / std::sqrt(std::max(counts_[i], 1.0));
    }
    total_ = static_cast<double>(h.total);
  }

  // Residuals and, when J is non-null, their Jacobian.
  Eigen::VectorXd residuals(const Eigen::VectorXd& th, Eigen::MatrixXd* J) const {
    const Unpacked u = unpack(th, L_, mode_);
    const auto nb = counts_.size();
    const std::size_t ne = h_.bin_edges.size();
    Eigen::VectorXd q = Eigen::VectorXd::Zero(nb);
    Eigen::MatrixXd dq_dmean, dq_dsigma, mass;
    if (J) {
      dq_dmean.setZero(nb, L_.n_peaks);
      dq_dsigma.setZero(nb, L_.n_peaks);
      mass.setZero(nb, L_.n_peaks);
    }
    std::vector<double> ue(ne), pe(ne);
    for (int n = 0; n < L_.n_peaks; ++n) {
      const double m = u.mean[n], s = u.sigma[n], w = u.weight[n];
      for (std::size_t e = 0; e < ne; ++e) {
        ue[e] = (h_.bin_edges[e] - m) / s;
        pe[e] = phi(ue[e]);
      }
      for (Eigen::Index i = 0; i < nb; ++i) {
        const double b = mass_between(ue[i], ue[i + 1]);
        q[i] += w * b;
        if (J) {
          mass(i, n) = b;
          dq_dmean(i, n) = -w * (pe[i + 1] - pe[i]) / s;
          dq_dsigma(i, n) = -w * (pe[i + 1] * ue[i + 1] - pe[i] * ue[i]) / s;
        }
      }
    }
    const Eigen::Index nt = std::max(0, L_.n_peaks - 2);
    Eigen::VectorXd r(nb + nt);
    r.head(nb) = (counts_ - total_ * q).cwiseProduct(inv_sd_);
    for (Eigen::Index t = 0; t < nt; ++t) {
      const int n = static_cast<int>(t) + 2;
      r[nb + t] = (th[L_.spacing(n)] - th[L_.spacing(n - 1)]) / kSpacingTie;
    }
    if (!J) return r;

    J->setZero(nb + nt, L_.size());
    for (int n = 0; n < L_.n_peaks; ++n) {
      // d mean_n / d m0 = 1; d mean_n / d spacing_j = exp(spacing_j) for j <= n.
      J->col(L_.mean0()).head(nb) += dq_dmean.col(n);
      for (int j = 1; j <= n; ++j) J->col(L_.spacing(j)).head(nb) += dq_dmean.col(n) * std::exp(th[L_.spacing(j)]);
      const int sk = mode_ == WidthMode::kFree ? n : std::min(n, 1);
      J->col(L_.sigma(sk)).head(nb) += dq_dsigma.col(n) * u.sigma[n];
      J->col(L_.z(n)).head(nb) = u.weight[n] * (mass.col(n) - q);
    }
    for (Eigen::Index c = 0; c < J->cols(); ++c) {
      J->col(c).head(nb) = -total_ * J->col(c).head(nb).cwiseProduct(inv_sd_);
    }
    for (Eigen::Index t = 0; t < nt; ++t) {
      const int n = static_cast<int>(t) + 2;
      (*J)(nb + t, L_.spacing(n)) = 1.0 / kSpacingTie;
      (*J)(nb + t, L_.spacing(n - 1)) = -1.0 / kSpacingTie;
    }
    return r;
  }

 private:
  const AmplitudeHistogram& h_;
  Layout L_;
  WidthMode mode_;
  Eigen::VectorXd counts_, inv_sd_;
  double total_ = 0.0;
};

// Local maxima of a lightly smoothed histogram, as bin centres.
std::vector<double> histogram_maxima(const AmplitudeHistogram& h) {
  const std::size_t nb = h.bins();
  const double width = (h.bin_edges.back() - h.bin_edges.front()) / static_cast<double>(nb);
  const auto smooth = static_cast<std::ptrdiff_t>(std::max(1.0, std::round(1.5 / width)));
  const auto guard = static_cast<std::ptrdiff_t>(std::max(2.0, std::round(5.0 / width)));
  std::vector<double> s(nb, 0.0);
  double peak = 0.0;
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nb); ++i) {
    double sum = 0.0;
    int n = 0;
    for (std::ptrdiff_t j = i - smooth; j <= i + smooth; ++j) {
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(nb)) continue;
      sum += static_cast<double>(h.counts[static_cast<std::size_t>(j)]);
      ++n;
    }
    s[static_cast<std::size_t>(i)] = sum / n;
    peak = std::max(peak, s[static_cast<std::size_t>(i)]);
  }
  const double floor = std::max(20.0, 1e-3 * peak);
  std::vector<double> out;
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nb); ++i) {
    const double v = s[static_cast<std::size_t>(i)];
    if (v < floor) continue;
    bool is_max = true;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - guard);
         j <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(nb) - 1, i + guard) && is_max; ++j) {
      if (j < i ? s[static_cast<std::size_t>(j)] >= v : s[static_cast<std::size_t>(j)] > v) is_max = false;
    }
    if (is_max) out.push_back(h.center(static_cast<std::size_t>(i)));
  }
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Eigen::VectorXd initial_guess(const AmplitudeHistogram& h, const Layout& L, const FitOptions& opts) {
  const auto maxima = histogram_maxima(h);
  const double lo = h.bin_edges.front(), hi = h.bin_edges.back();
  double gain = opts.initial_gain_mv;
  if (gain <= 0.0 && maxima.size() >= 2) {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < maxima.size(); ++i) gaps.push_back(maxima[i] - maxima[i - 1]);
    gain = median(gaps);
  }
  if (gain <= 0.0) gain = (hi - std::max(lo, 0.0)) / (L.n_peaks + 1);

  double m0 = std::clamp(0.0, lo, hi);
  for (double m : maxima) {
    if (std::abs(m) < 0.5 * gain) {
      m0 = m;
      break;
    }
  }

  Eigen::VectorXd th(L.size());
  th[L.mean0()] = m0;
  for (int n = 1; n < L.n_peaks; ++n) th[L.spacing(n)] = std::log(gain);
  const double sigma = gain / 6.0;
  for (int k = 0; k < L.n_sigmas; ++k) th[L.sigma(k)] = std::log(sigma);

  std::vector<double> mass(L.n_peaks, 0.0);
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double c = h.center(i);
    const int n = std::clamp(static_cast<int>(std::floor((c - m0) / gain + 0.5)), 0, L.n_peaks - 1);
    mass[n] += static_cast<double>(h.counts[i]);
  }
  for (int n = 0; n < L.n_peaks; ++n) {
    th[L.z(n)] = std::log(std::max(mass[n] / std::max(1.0, double(h.total)), 1e-9));
  }
  return th;
}

}  // namespace

FitResult fit_mixture(const AmplitudeHistogram& hist, const FitOptions& opts) {
  if (opts.n_max < 1) throw std::invalid_argument("fit_mixture: n_max must be >= 1");
  if (hist.total < 10000) {
    throw std::invalid_argument("fit_mixture: histogram needs at least 1e4 counts, has " +
                                std::to_string(hist.total));
  }
  if (opts.max_iterations < 1) throw std::invalid_argument("fit_mixture: max_iterations must be >= 1");

  const int n_peaks = opts.n_max + 1;
  const Layout L{n_peaks, opts.mode == WidthMode::kFree ? n_peaks : 2};
  const Problem problem(hist, L, opts.mode);

  Eigen::VectorXd th = initial_guess(hist, L, opts);
  const double spacing_lo = th[L.spacing(1)] - std::log(2.0);
  const double spacing_hi = th[L.spacing(1)] + std::log(2.0);
  const double span = hist.bin_edges.back() - hist.bin_edges.front();
  const double sigma_lo = std::log(0.5 * span / static_cast<double>(hist.bins()));
  const double sigma_hi = std::log(span);
  Eigen::MatrixXd J;
  Eigen::VectorXd r = problem.residuals(th, &J);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  FitResult result;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    Eigen::VectorXd g = J.transpose() * r;
    // Parameters resting on a bound with the gradient pointing outward stay
    // put this iteration.
    std::vector<bool> pinned(static_cast<std::size_t>(L.size()), false);
    auto pin = [&](int k, double lo_b, double hi_b) {
      pinned[k] = (th[k] <= lo_b && g[k] > 0.0) || (th[k] >= hi_b && g[k] < 0.0);
    };
    for (int n = 1; n < n_peaks; ++n) pin(L.spacing(n), spacing_lo, spacing_hi);
    for (int k = 0; k < L.n_sigmas; ++k) pin(L.sigma(k), sigma_lo, sigma_hi);
    const double diag_floor = 1e-12 * std::max(1.0, JtJ.diagonal().maxCoeff());
    bool accepted = false;
    double rel_drop = 0.0;
    while (lambda < 1e12) {
      Eigen::MatrixXd A = JtJ;
      for (Eigen::Index k = 0; k < A.rows(); ++k) A(k, k) += lambda * std::max(JtJ(k, k), diag_floor);
      Eigen::VectorXd rhs = -g;
      for (int k = 0; k < L.size(); ++k) {
        if (!pinned[k]) continue;
        A.row(k).setZero();
        A.col(k).setZero();
        A(k, k) = 1.0;
        rhs[k] = 0.0;
      }
      const Eigen::VectorXd step = A.ldlt().solve(rhs);
      Eigen::VectorXd trial = th + step;
      // Keep softmax logits in a numerically sane band.
      double zmax = -INFINITY;
      for (int n = 0; n < n_peaks; ++n) zmax = std::max(zmax, trial[L.z(n)]);
      for (int n = 0; n < n_peaks; ++n) trial[L.z(n)] = std::max(trial[L.z(n)] - zmax, -60.0);
      // Peaks with no support would otherwise drift onto their neighbours or
      // shrink below a bin; both make the model degenerate.
      for (int n = 1; n < n_peaks; ++n) {
        trial[L.spacing(n)] = std::clamp(trial[L.spacing(n)], spacing_lo, spacing_hi);
      }
      for (int k = 0; k < L.n_sigmas; ++k) trial[L.sigma(k)] = std::clamp(trial[L.sigma(k)], sigma_lo, sigma_hi);
      const Eigen::VectorXd r_trial = problem.residuals(trial, nullptr);
      const double c_trial = r_trial.squaredNorm();
      if (std::isfinite(c_trial) && c_trial < cost) {
        rel_drop = (cost - c_trial) / std::max(cost, 1e-300);
        th = trial;
        cost = c_trial;
        r = problem.residuals(th, &J);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    // Either no downhill step exists at any damping or progress has stalled:
    // both mean a minimum has been reached.
    if (!accepted || rel_drop < 1e-11) {
      result.valid = true;
      break;
    }
  }
  result.iterations = it;
  result.residual_norm = std::sqrt(cost);

  const Unpacked u = unpack(th, L, opts.mode);
  {
    // Softmax logits leave JtJ singular along their common shift, which the
    // mean gradients are orthogonal to, so the pseudo-inverse is exact here.
    const Eigen::MatrixXd cov = (J.transpose() * J).completeOrthogonalDecomposition().pseudoInverse();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(L.size());
    grad[L.mean0()] = 1.0;
    result.mean_stderr.push_back(std::sqrt(std::max(0.0, cov(L.mean0(), L.mean0()))));
    for (int n = 1; n < n_peaks; ++n) {
      grad[L.spacing(n)] = std::exp(th[L.spacing(n)]);
      result.mean_stderr.push_back(std::sqrt(std::max(0.0, grad.dot(cov * grad))));
    }
  }
  for (int n = 0; n < n_peaks; ++n) {
    result.model.peaks.push_back({n, u.mean[n], u.sigma[n], u.weight[n]});
    const double expected = u.weight[n] * static_cast<double>(hist.total);
    // A spacing parked on its clamp means the data never located the peak;
    // its weight is then just whatever tail mass it soaked up.
    const bool parked = n >= 1 && (th[L.spacing(n)] <= spacing_lo + 1e-9 || th[L.spacing(n)] >= spacing_hi - 1e-9);
    if (parked) {
      result.warnings.push_back("rank deficiency: peak N=" + std::to_string(n) +
                                " has no resolvable position (spacing pinned at its bound)");
    } else if (expected < opts.min_peak_counts) {
      result.warnings.push_back("rank deficiency: peak N=" + std::to_string(n) + " holds ~" +
                                std::to_string(static_cast<long long>(std::llround(expected))) +
                                " counts; n_max exceeds the visible peaks");
    }
  }
  if (!result.valid) {
    result.warnings.push_back("fit did not converge within " + std::to_string(opts.max_iterations) +
                              " iterations");
  }
  return result;
}

}  // namespace pnd
