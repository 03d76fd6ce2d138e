#include "pnd/photonstat.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace pnd {
namespace {

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

constexpr double kInversionLimit = 10.0;

std::int64_t poisson_inversion(double mu, Stream& rng) {
  const double u = rng.uniform();
  double p = std::exp(-mu);
  double cdf = p;
  std::int64_t k = 0;
  // The cdf can stall just below 1 through rounding; 400 terms is far past
  // any mass that matters for mu < 10.
  while (u >= cdf && k < 400) {
    ++k;
    p *= mu / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

}  // namespace

PhotonFlux::PhotonFlux(double mu) : mu_(mu) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("photon flux must be finite and >= 0, got " + std::to_string(mu));
  }
}

EfficiencyChain::EfficiencyChain(double qe, double p_eta) : qe_(qe), p_eta_(p_eta) {
  require_probability(qe, "quantum efficiency");
  require_probability(p_eta, "avalanche probability");
}

double poisson_pmf(std::int64_t n, double mu) {
  if (n < 0) throw std::invalid_argument("poisson_pmf: negative photon number");
  if (!(mu >= 0.0)) throw std::invalid_argument("poisson_pmf: negative mean");
  if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
  const double nd = static_cast<double>(n);
  return std::exp(nd * std::log(mu) - mu - std::lgamma(nd + 1.0));
}

double poisson_pmf(std::int64_t n, PhotonFlux flux) { return poisson_pmf(n, flux.mu()); }

double poisson_tail(std::int64_t n, double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("poisson_tail: negative mean");
  if (n <= 0) return 1.0;
  if (mu == 0.0) return 0.0;
  // P(X >= n) is the regularized lower incomplete gamma P(n, mu).
  return boost::math::gamma_p(static_cast<double>(n), mu);
}

PhotonFlux detected_flux(PhotonFlux flux, const EfficiencyChain& chain) {
  return PhotonFlux(flux.mu() * chain.eta());
}

std::int64_t sample_poisson(double mu, Stream& rng) {
  if (!(mu >= 0.0)) throw std::invalid_argument("sample_poisson: negative mean");
  if (mu == 0.0) return 0;
  std::int64_t total = 0;
  while (mu >= kInversionLimit) {
    total += poisson_inversion(kInversionLimit / 2, rng);
    mu -= kInversionLimit / 2;
  }
  return total + poisson_inversion(mu, rng);
}

std::int64_t sample_photon_number(PhotonFlux flux, Stream& rng) { return sample_poisson(flux.mu(), rng); }

std::int64_t thin(std::int64_t n, double p, Stream& rng) {
  require_probability(p, "thinning probability");
  if (n < 0) throw std::invalid_argument("thin: negative count");
  if (p == 0.0 || n == 0) return 0;
  if (p == 1.0) return n;
  std::int64_t kept = 0;
  for (std::int64_t i = 0; i < n; ++i) kept += rng.uniform() < p;
  return kept;
}

}  // namespace pnd
