// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pald/metrics/fft.hpp"
#include "pald/metrics/metrics.hpp"
#include "pald/noise/noise.hpp"

namespace pald::metrics {
namespace {

using V = std::vector<double>;

TEST(SiSdr, PerfectAndRescaledHitTheCap) {
  const V s = {1, -2, 3, 0.5};
  V twice;
  for (double v : s) twice.push_back(2 * v);
  EXPECT_EQ(si_sdr(s, s), kSiSdrCapDb);
  EXPECT_EQ(si_sdr(s, twice), kSiSdrCapDb);
}

TEST(SiSdr, OrthogonalErrorOfEqualNormIsZeroDb) {
  const V s = {1, 0, 1, 0}, e = {0, 1, 0, 1};
  V est;
  for (std::size_t i = 0; i < s.size(); ++i) est.push_back(s[i] + e[i]);
  EXPECT_NEAR(si_sdr(s, est), 0.0, 1e-12);
}

TEST(SiSdr, ScaleInvariantAndRotationInvariant) {
  Rng rng(1);
  V s(16), est(16);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.normal();
    est[i] = s[i] + 0.3 * rng.normal();
  }
  const double base = si_sdr(s, est);
  for (double c : {0.1, 3.0, -2.0}) {
    V scaled;
    for (double v : est) scaled.push_back(c * v);
    EXPECT_NEAR(si_sdr(s, scaled), base, 1e-10) << c;
  }
  const FeatureMap q = FeatureMap::random(4, 4, rng);
  Eigen::Map<const Eigen::RowVectorXd> sm(s.data(), 16), em(est.data(), 16);
  const Eigen::RowVectorXd rs = sm * q.basis.matrix(), re = em * q.basis.matrix();
  EXPECT_NEAR(si_sdr(V(rs.data(), rs.data() + 16), V(re.data(), re.data() + 16)), base, 1e-10);
}

TEST(SiSdr, DegenerateInputsAreErrors) {
  EXPECT_THROW(si_sdr(V{0, 0}, V{1, 1}), std::invalid_argument);
  EXPECT_THROW(si_sdr(V{1, 1}, V{0, 0}), std::invalid_argument);
  EXPECT_THROW(si_sdr(V{1, 1}, V{1}), std::invalid_argument);
}

TEST(GroupError, ZeroConfinedAndParseval) {
  Rng rng(2);
  const FeatureMap fm = FeatureMap::random(4, 3, rng);
  EXPECT_LT(fm.orthonormality_error(), 1e-12);
  RowMatrix x(5, 12);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (double e : group_error(x, x, fm)) EXPECT_EQ(e, 0.0);

  // Error along the first group's basis vectors only.
  RowMatrix coeff = RowMatrix::Zero(5, 12);
  coeff.leftCols(3).setRandom();
  const RowMatrix xh = x + coeff * fm.basis.matrix().transpose();
  const auto e1 = group_error(x, xh, fm);
  EXPECT_GT(e1[0], 0.0);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_LT(e1[k], 1e-24);

  RowMatrix y(5, 12);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
  double total = 0.0;
  for (double e : group_error(x, y, fm)) total += e;
  EXPECT_NEAR(total, (x - y).squaredNorm(), 1e-10);
}

TEST(Psd, ParsevalHolds) {
  Rng rng(3);
  V x(1000);
  for (auto& v : x) v = rng.normal() * 2.0 + 0.5;
  for (std::size_t nfft : {8u, 64u, 100u, 1000u}) {
    const auto p = psd(x, nfft);
    ASSERT_EQ(p.size(), nfft / 2 + 1);
    const std::size_t used = (x.size() / nfft) * nfft;
    double ms = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < used; ++i) ms += x[i] * x[i] / double(used);
    for (double v : p) sum += v;
    EXPECT_NEAR(sum, ms, 1e-9) << nfft;
  }
}

TEST(Psd, SinusoidConcentratesInItsBin) {
  const std::size_t n = 64, k0 = 5;
  V x(n * 20);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::sin(2.0 * std::numbers::pi * double(k0 * i) / double(n));
  const auto p = psd(x, n);
  double total = 0.0;
  for (double v : p) total += v;
  EXPECT_GT(p[k0] / total, 0.99);
}

TEST(Psd, WhiteNoiseIsFlatAndZeroIsZero) {
  Rng rng(4);
  const std::size_t n = 32;
  V x(n * 10000);
  for (auto& v : x) v = rng.normal();
  const auto p = psd(x, n);
  const auto w = white_noise_psd(n, 1.0);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k] / w[k], 1.0, 0.1) << k;
  for (double v : psd(V(128, 0.0), 32)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(psd(V(10, 1.0), 11), std::invalid_argument);
}

TEST(Psd, NoisedSignalIsMixtureOfSpectra) {
  // psd((1−t)z + t·n) ≈ (1−t)²·psd(z) + t²·flat for independent white n.
  Rng rng(5);
  const std::size_t n = 32, len = n * 4000;
  Tensor z({len});
  double prev = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    prev = 0.9 * prev + rng.normal();  // red signal
    z[i] = prev;
  }
  const double t = 0.4;
  const auto noised = noise::noise_latents(z, t, 1.0, 11);
  const auto pz = to_white_units(psd(z.data(), n), n);
  const auto pn = to_white_units(psd(noised.z_prime.data(), n), n);
  for (std::size_t k = 0; k < pz.size(); ++k) {
    const double expected = (1 - t) * (1 - t) * pz[k] + t * t;
    EXPECT_NEAR(pn[k] / expected, 1.0, 0.1) << k;
  }
}

TEST(Fft, RoundTrip) {
  const V x = {1, 2, -1, 0.5, 3};
  const auto f = fft_real(x);
  ASSERT_EQ(f.size(), x.size());
  EXPECT_NEAR(f[0].real(), 5.5, 1e-12);
  const auto back = ifft(f);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(back[i].real(), x[i], 1e-12);
    EXPECT_NEAR(back[i].imag(), 0.0, 1e-12);
  }
}

}  // namespace
}  // namespace pald::metrics
