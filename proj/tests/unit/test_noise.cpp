// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pald/metrics/metrics.hpp"
#include "pald/noise/noise.hpp"
#include "pald/stats/stats.hpp"

namespace pald::noise {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> draw_t(double m, double s, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> t(n);
  for (auto& v : t) v = sample_t({m, s, 1.0}, rng);
  return t;
}

TEST(SampleT, MedianIsHalfAtZeroLocation) {
  const auto t = draw_t(0.0, 1.0, 100000, 1);
  EXPECT_NEAR(stats::median(t), 0.5, 0.01);
  for (double v : t) {
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}

TEST(SampleT, MedianFollowsSigmoidOfLocation) {
  const auto t = draw_t(-2.0, 1.0, 100000, 2);
  EXPECT_NEAR(stats::median(t), 0.1192, 0.01);
}

TEST(SampleT, TinyScaleCollapsesToHalf) {
  for (double v : draw_t(0.0, 1e-12, 1000, 3)) EXPECT_NEAR(v, 0.5, 1e-9);
}

TEST(SampleT, MatchesLogitNormalCdf) {
  for (double m : {0.0, -1.0, -2.0}) {
    auto t = draw_t(m, 1.0, 100000, 4);
    std::sort(t.begin(), t.end());
    double ks = 0.0;
    const double n = double(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double f = logit_normal_cdf(t[i], m, 1.0);
      ks = std::max({ks, std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)});
    }
    EXPECT_LT(ks, 0.01) << "m=" << m;
  }
}

TEST(Schedule, RejectsBadParameters) {
  EXPECT_THROW((NoiseSchedule{0.0, 0.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((NoiseSchedule{0.0, 1.0, -1.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((NoiseSchedule{-1.0, 1.0, 1.0}.validate()));
}

TEST(NoiseLatents, Endpoints) {
  Rng rng(5);
  const Tensor z = rng.normal_tensor({4, 8});
  EXPECT_EQ(noise_latents(z, 0.0, 1.0, 77).z_prime, z);
  const auto a = noise_latents(z, 1.0, 1.0, 77);
  const auto b = noise_latents(Tensor({4, 8}, 3.0), 1.0, 1.0, 77);
  EXPECT_EQ(a.z_prime, b.z_prime);
  EXPECT_THROW(noise_latents(z, 1.5, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(noise_latents(z, -0.1, 1.0, 1), std::invalid_argument);
}

TEST(NoiseLatents, HalfwayVarianceIsOneHalf) {
  Rng rng(6);
  const Tensor z = rng.normal_tensor({100000});
  const auto out = noise_latents(z, 0.5, 1.0, 99);
  double sq = 0.0, mean = 0.0;
  for (double v : out.z_prime.data()) mean += v;
  mean /= double(z.size());
  for (double v : out.z_prime.data()) sq += (v - mean) * (v - mean);
  EXPECT_NEAR(sq / double(z.size()), 0.5, 0.01);
}

TEST(NoiseLatents, MixtureIsLinearInSignal) {
  Rng rng(7);
  const Tensor z = rng.normal_tensor({3, 5});
  const double alpha = 2.5, t = 0.3;
  Tensor scaled = z;
  for (auto& v : scaled.storage()) v *= alpha;
  const auto a = noise_latents(scaled, t, 1.0, 1234);
  const auto zero = noise_latents(Tensor(z.shape(), 0.0), t, 1.0, 1234);
  for (std::size_t i = 0; i < z.size(); ++i)
    EXPECT_NEAR(a.z_prime[i] - zero.z_prime[i], alpha * (1.0 - t) * z[i], 1e-12);
}

TEST(NoiseLatents, ReproducibleFromSeed) {
  const Tensor z({2, 2}, 1.0);
  EXPECT_EQ(noise_latents(z, 0.4, 1.0, 5).z_prime, noise_latents(z, 0.4, 1.0, 5).z_prime);
  EXPECT_NE(noise_latents(z, 0.4, 1.0, 5).z_prime, noise_latents(z, 0.4, 1.0, 6).z_prime);
}

TEST(Snr, TableLevels) {
  EXPECT_EQ(snr_of_t(0.0, 1.0, 1.0), kInf);
  EXPECT_NEAR(snr_of_t(1.0 / 3.0, 1.0, 1.0), 4.0, 1e-12);
  EXPECT_DOUBLE_EQ(snr_of_t(0.5, 1.0, 1.0), 1.0);
  EXPECT_EQ(snr_of_t(1.0, 1.0, 1.0), 0.0);
  EXPECT_EQ(t_of_snr(kInf, 1.0, 1.0), 0.0);
  EXPECT_NEAR(t_of_snr(4.0, 1.0, 1.0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(t_of_snr(0.25, 1.0, 1.0), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(t_of_snr(0.0, 1.0, 1.0), 1.0);
  EXPECT_THROW(t_of_snr(-1.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(endpoint_snr(2.0, 0.5), 8.0);
}

TEST(Snr, RoundTrips) {
  for (int i = 0; i <= 120; ++i) {
    const double q = std::pow(10.0, -6.0 + 0.1 * i);
    for (double zp : {1.0, 0.3}) {
      for (double gamma : {1.0, 2.0}) {
        const double back = snr_of_t(t_of_snr(q, zp, gamma), zp, gamma);
        // Absolute 1e-12 for q ≤ 1; above that the double spacing of q itself
        // exceeds 1e-12, so the bound is taken relative to q.
        EXPECT_LE(std::abs(back - q), 1e-12 * std::max(1.0, q)) << q;
      }
    }
  }
  for (int i = 1; i < 1000; ++i) {
    const double t = i / 1000.0;
    EXPECT_NEAR(t_of_snr(snr_of_t(t, 1.0, 1.0), 1.0, 1.0), t, 1e-12);
  }
}

TEST(Snr, StrictlyMonotone) {
  double prev = kInf;
  for (int i = 1; i <= 100; ++i) {
    const double s = snr_of_t(i / 100.0, 1.0, 1.0);
    EXPECT_LT(s, prev);
    prev = s;
  }
  EXPECT_GT(t_of_snr(0.5, 1.0, 1.0), t_of_snr(2.0, 1.0, 1.0));
}

TEST(Snr, MonteCarloPowerRatio) {
  Rng rng(8);
  const std::size_t n = 1000000;
  for (double t : {1.0 / 3.0, 0.5, 2.0 / 3.0}) {
    double ps = 0.0, pn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = (1.0 - t) * rng.normal(), e = t * rng.normal();
      ps += s * s;
      pn += e * e;
    }
    EXPECT_NEAR(ps / pn / snr_of_t(t, 1.0, 1.0), 1.0, 0.02) << t;
  }
}

TEST(Spectral, FlatSignalGivesUniformSnr) {
  const double t = 0.3, gamma = 1.7;
  const std::vector<double> psd(33, gamma * gamma);
  for (double v : spectral_snr_profile(psd, t, gamma))
    EXPECT_NEAR(v, std::pow((1.0 - t) / t, 2), 1e-12);
}

TEST(Spectral, PowerLawCrossingFrequency) {
  const double p1 = 150.0;
  std::vector<double> psd(64);
  for (std::size_t f = 1; f <= psd.size(); ++f) psd[f - 1] = p1 / double(f * f);
  const auto snr = spectral_snr_profile(psd, 0.5, 1.0);
  std::size_t k = 0;
  while (snr[k] > 1.0) ++k;
  const double f_lo = double(k), f_hi = double(k + 1);  // bins are 1-based frequencies
  // log SNR is linear in log f for a power law, so interpolation is exact.
  const double a = std::log(snr[k - 1]), b = std::log(snr[k]);
  const double crossing = std::exp(std::log(f_lo) + (std::log(f_hi) - std::log(f_lo)) * a / (a - b));
  EXPECT_NEAR(crossing, std::sqrt(p1), 1e-9);
}

TEST(Spectral, VanishingNoiseDivergesAndErrors) {
  const std::vector<double> psd = {1.0, 0.5, 0.0};
  const auto s = spectral_snr_profile(psd, 1e-9, 1.0);
  EXPECT_GT(s[0], 1e17);
  EXPECT_GT(s[1], 1e17);
  EXPECT_THROW(spectral_snr_profile(std::vector<double>(4, 0.0), 0.5, 1.0), std::invalid_argument);
}

TEST(Spectral, WhiteNoisePsdIsFlatInWhiteUnits) {
  Rng rng(10);
  std::vector<double> x(1 << 16);
  for (auto& v : x) v = rng.normal();
  const auto units = metrics::to_white_units(metrics::psd(x, 64), 64);
  double mean = 0.0;
  for (double v : units) mean += v / double(units.size());
  EXPECT_NEAR(mean, 1.0, 0.03);
}

TEST(Grids, Defaults) {
  const auto g = ic_t_grid();
  ASSERT_EQ(g.size(), 9u);
  EXPECT_DOUBLE_EQ(g.front(), 0.1);
  EXPECT_DOUBLE_EQ(g.back(), 0.9);
  const auto s = table_snr_levels();
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0], kInf);
  EXPECT_EQ(s[3], 0.25);
}

}  // namespace
}  // namespace pald::noise
