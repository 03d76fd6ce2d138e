#pragma once

#include <cstdint>

#include "pnd/random.hpp"

namespace pnd {

// Mean photon number per pulse.
class PhotonFlux {
 public:
  PhotonFlux() = default;
  explicit PhotonFlux(double mu);
  double mu() const { return mu_; }

 private:
  double mu_ = 0.0;
};

// Detection efficiency eta = qe * p_eta, split into optical absorption and
// avalanche triggering.
class EfficiencyChain {
 public:
  EfficiencyChain(double qe, double p_eta);
  double qe() const { return qe_; }
  double p_eta() const { return p_eta_; }
  double eta() const { return qe_ * p_eta_; }

 private:
  double qe_;
  double p_eta_;
};

// Poisson probability mass, evaluated through lgamma so large n and mu do not
// overflow.
double poisson_pmf(std::int64_t n, double mu);
double poisson_pmf(std::int64_t n, PhotonFlux flux);
// P(X >= n) for X ~ Poisson(mu).
double poisson_tail(std::int64_t n, double mu);

PhotonFlux detected_flux(PhotonFlux flux, const EfficiencyChain& chain);

// Poisson draw by sequential-search inversion. Means of 10 or more are split
// into a sum of smaller independent draws.
std::int64_t sample_photon_number(PhotonFlux flux, Stream& rng);
std::int64_t sample_poisson(double mu, Stream& rng);

// Binomial(n, p) draw: each of the n items survives independently with p.
std::int64_t thin(std::int64_t n, double p, Stream& rng);

}  // namespace pnd
