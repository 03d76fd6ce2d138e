#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pnd/photonstat.hpp"

namespace pnd {
namespace {

// Reference values below were evaluated in 50-digit arithmetic.
constexpr double kPmf1At092 = 0.36663751779775304;
constexpr double kPmf2At37 = 0.16923253868947312;
constexpr double kMultiAt0033 = 5.3266794452993447e-4;  // 1 - e^-mu (1 + mu)

TEST(PhotonFlux, RejectsNegativeAndNan) {
  EXPECT_THROW(PhotonFlux(-0.1), std::invalid_argument);
  EXPECT_THROW(PhotonFlux(std::nan("")), std::invalid_argument);
  EXPECT_NO_THROW(PhotonFlux(0.0));
}

TEST(EfficiencyChain, ProductAndRange) {
  EXPECT_THROW(EfficiencyChain(1.1, 0.5), std::invalid_argument);
  EXPECT_THROW(EfficiencyChain(0.5, -0.1), std::invalid_argument);
  EXPECT_NEAR(EfficiencyChain(0.81, 0.911).eta(), 0.738, 5e-4);
  EXPECT_DOUBLE_EQ(EfficiencyChain(0.81, 0.911).eta(), 0.73791);
}

TEST(PoissonPmf, Examples) {
  EXPECT_EQ(poisson_pmf(0, 0.0), 1.0);
  EXPECT_EQ(poisson_pmf(3, 0.0), 0.0);
  EXPECT_NEAR(poisson_pmf(1, PhotonFlux(0.92)), kPmf1At092, 1e-15);
  EXPECT_NEAR(poisson_pmf(2, PhotonFlux(3.7)), kPmf2At37, 1e-15);
}

TEST(PoissonPmf, Normalized) {
  for (double mu : {0.033, 0.92, 3.7, 5.16}) {
    double sum = 0.0;
    for (int n = 0; n < 200; ++n) sum += poisson_pmf(n, mu);
    EXPECT_NEAR(sum, 1.0, 1e-12) << "mu = " << mu;
  }
}

TEST(PoissonPmf, LargeArgumentsStayFinite) {
  const double p = poisson_pmf(1000, 1000.0);
  EXPECT_TRUE(std::isfinite(p));
  EXPECT_NEAR(p, 1.0 / std::sqrt(2.0 * M_PI * 1000.0), 1e-5);
}

TEST(PoissonTail, MatchesComplementSum) {
  for (int n : {0, 1, 2, 5}) {
    double head = 0.0;
    for (int k = 0; k < n; ++k) head += poisson_pmf(k, 0.92);
    EXPECT_NEAR(poisson_tail(n, 0.92), 1.0 - head, 1e-14);
  }
  EXPECT_NEAR(poisson_tail(2, 0.033), kMultiAt0033, 1e-17);
}

TEST(DetectedFlux, Examples) {
  EXPECT_NEAR(detected_flux(PhotonFlux(5.16), EfficiencyChain(1.0, 0.717)).mu(), 3.70, 0.005);
  EXPECT_EQ(detected_flux(PhotonFlux(2.5), EfficiencyChain(1.0, 1.0)).mu(), 2.5);
  EXPECT_EQ(detected_flux(PhotonFlux(0.0), EfficiencyChain(0.3, 0.4)).mu(), 0.0);
}

TEST(SamplePhotonNumber, ZeroFluxAlwaysZero) {
  for (int i = 0; i < 1000; ++i) {
    Stream rng(3, Domain::kSampling, static_cast<std::uint64_t>(i));
    ASSERT_EQ(sample_photon_number(PhotonFlux(0.0), rng), 0);
  }
}

TEST(SamplePhotonNumber, MeanAt516) {
  const int n = 1000000;
  Stream rng(17, Domain::kSampling, 0);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(sample_photon_number(PhotonFlux(5.16), rng));
  EXPECT_NEAR(sum / n, 5.16, 3.0 * std::sqrt(5.16 / n));
}

TEST(SamplePhotonNumber, MultiPhotonFractionAt0033) {
  const int n = 1000000;
  Stream rng(19, Domain::kSampling, 0);
  int multi = 0;
  for (int i = 0; i < n; ++i) multi += sample_photon_number(PhotonFlux(0.033), rng) >= 2;
  const double se = std::sqrt(kMultiAt0033 * (1.0 - kMultiAt0033) / n);
  EXPECT_NEAR(static_cast<double>(multi) / n, kMultiAt0033, 3.0 * se);
}

TEST(SamplePoisson, LargeMeanUsesSplitting) {
  const int n = 200000;
  Stream rng(23, Domain::kSampling, 0);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<double>(sample_poisson(37.5, rng));
    sum += k;
    sum2 += k * k;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 37.5, 3.0 * std::sqrt(37.5 / n));
  EXPECT_NEAR(sum2 / n - mean * mean, 37.5, 0.5);
}

TEST(Thin, Edges) {
  Stream rng(1, Domain::kSampling, 0);
  for (int n : {0, 1, 7, 40}) {
    EXPECT_EQ(thin(n, 1.0, rng), n);
    EXPECT_EQ(thin(n, 0.0, rng), 0);
  }
  EXPECT_THROW(thin(-1, 0.5, rng), std::invalid_argument);
  EXPECT_THROW(thin(3, 1.5, rng), std::invalid_argument);
}

// Thinning a Poisson stream twice must give a Poisson stream at the product
// mean; checked by a chi-square goodness-of-fit test.
TEST(Thin, CompositeThinningIsPoisson) {
  const int n = 1000000;
  const double mu = 5.16 * 0.81 * 0.911;
  const int kmax = 12;  // last cell collects k >= kmax
  std::vector<double> observed(kmax + 1, 0.0);
  Stream rng(29, Domain::kSampling, 0);
  for (int i = 0; i < n; ++i) {
    const auto k = thin(thin(sample_photon_number(PhotonFlux(5.16), rng), 0.81, rng), 0.911, rng);
    observed[static_cast<std::size_t>(std::min<std::int64_t>(k, kmax))] += 1.0;
  }
  double chi2 = 0.0;
  for (int k = 0; k <= kmax; ++k) {
    const double p = k < kmax ? poisson_pmf(k, mu) : poisson_tail(kmax, mu);
    const double expected = p * n;
    ASSERT_GT(expected, 5.0);
    chi2 += (observed[static_cast<std::size_t>(k)] - expected) * (observed[static_cast<std::size_t>(k)] - expected) / expected;
  }
  const boost::math::chi_squared dist(kmax);
  const double p_value = boost::math::cdf(boost::math::complement(dist, chi2));
  EXPECT_GT(p_value, 1e-3) << "chi2 = " << chi2;
}

}  // namespace
}  // namespace pnd
