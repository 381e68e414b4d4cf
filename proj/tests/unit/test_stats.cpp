// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "pald/error.hpp"
#include "pald/numerics/rng.hpp"
#include "pald/stats/stats.hpp"

namespace pald::stats {
namespace {

using V = std::vector<double>;

TEST(Pearson, AffineAndHandComputedCases) {
  const V x = {1, 2, 3, 4, 5};
  V y, z;
  for (double v : x) {
    y.push_back(2 * v + 1);
    z.push_back(-v);
  }
  EXPECT_DOUBLE_EQ(pearson(x, y), 1.0);
  EXPECT_DOUBLE_EQ(pearson(x, z), -1.0);
  EXPECT_DOUBLE_EQ(pearson(V{1, 2, 3, 4}, V{1, 3, 2, 4}), 0.8);
  EXPECT_THROW(pearson(V{1, 2, 3}, V{2, 2, 2}), NumericalError);
  EXPECT_THROW(pearson(V{1, 2}, V{1, 2}), std::invalid_argument);
}

TEST(Spearman, RankCases) {
  EXPECT_DOUBLE_EQ(spearman(V{1, 2, 3}, V{3, 1, 2}).rho, -0.5);
  EXPECT_DOUBLE_EQ(spearman(V{1, 2, 3, 4}, V{4, 3, 2, 1}).rho, -1.0);
  V x = {0.3, -1.0, 2.0, 5.0, 0.1}, y;
  for (double v : x) y.push_back(std::exp(3 * v));
  EXPECT_DOUBLE_EQ(spearman(x, y).rho, 1.0);
  EXPECT_THROW(spearman(V{1, 1, 1}, V{1, 2, 3}), NumericalError);
}

TEST(Spearman, EqualsPearsonOfRanksWithTies) {
  const V x = {1, 2, 2, 3, 5, 5, 5, 8}, y = {2, 1, 4, 4, 3, 9, 0, 7};
  EXPECT_EQ(spearman(x, y).rho, pearson(ranks(x), ranks(y)));
  EXPECT_EQ(ranks(x), (V{1, 2.5, 2.5, 4, 6, 6, 6, 8}));
}

TEST(Spearman, SignificanceFlag) {
  Rng rng(1);
  V x(200), y(200);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = x[i] + 0.5 * rng.normal();
  }
  const auto r = spearman(x, y);
  EXPECT_TRUE(r.significant);
  EXPECT_LT(r.p, 1e-10);
}

TEST(PairedT, HandComputedCases) {
  const V zeros(5, 0.0);
  const auto r = paired_t(V{1, 2, 3, 4, 5}, zeros);
  EXPECT_NEAR(r.statistic, 4.242640687119285, 1e-12);
  EXPECT_NEAR(r.p, 0.013235599563682695, 1e-10);
  const auto flat = paired_t(V{1, -1, 1, -1}, V(4, 0.0));
  EXPECT_EQ(flat.statistic, 0.0);
  EXPECT_NEAR(flat.p, 1.0, 1e-12);
  EXPECT_THROW(paired_t(V{2, 3, 4}, V{1, 2, 3}), NumericalError);
}

TEST(PairedT, SwappingSamplesFlipsSign) {
  const V x = {1.2, 0.3, 2.2, 1.9}, y = {0.1, 0.5, 1.0, 0.2};
  const auto a = paired_t(x, y), b = paired_t(y, x);
  EXPECT_EQ(a.statistic, -b.statistic);
  EXPECT_EQ(a.p, b.p);
}

TEST(StudentT, ReferenceValues) {
  // Two-sided 5% critical values.
  EXPECT_NEAR(student_t_two_sided(2.776445105197793, 4), 0.05, 1e-10);
  EXPECT_NEAR(student_t_two_sided(2.0423, 30), 0.05, 1e-4);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
}

TEST(Wilcoxon, SixPositiveDifferences) {
  const auto r = wilcoxon_signed_rank(V{1, 2, 3, 4, 5, 6}, V(6, 0.0));
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.w_minus, 0.0);
  EXPECT_EQ(r.w_plus, 21.0);
  EXPECT_DOUBLE_EQ(r.p, 0.03125);
}

TEST(Wilcoxon, SymmetricDifferencesAreAtTheCenter) {
  const auto r = wilcoxon_signed_rank(V{1, -1, 2, -2, 3, -3}, V(6, 0.0));
  EXPECT_EQ(r.w_plus, r.w_minus);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
}

TEST(Wilcoxon, SingleNonzeroAndZeros) {
  const auto r = wilcoxon_signed_rank(V{0, 0, 4}, V{0, 0, 0});
  EXPECT_EQ(r.n_nonzero, 1u);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
  EXPECT_THROW(wilcoxon_signed_rank(V{1, 2}, V{1, 2}), std::invalid_argument);
}

TEST(Wilcoxon, LargeSampleUsesNormalApproximation) {
  Rng rng(3);
  V x(40), y(40, 0.0);
  for (auto& v : x) v = rng.normal() + 1.0;
  const auto r = wilcoxon_signed_rank(x, y);
  EXPECT_FALSE(r.exact);
  EXPECT_LT(r.p, 1e-5);
  const auto s = wilcoxon_signed_rank(y, x);
  EXPECT_DOUBLE_EQ(r.p, s.p);
}

TEST(AndersonDarling, CalibratedRejectionRate) {
  Rng rng(2024);
  int rejects = 0;
  const int runs = 1000;
  V x(10000);
  for (int r = 0; r < runs; ++r) {
    for (auto& v : x) v = rng.normal();
    rejects += anderson_darling_normality(x).reject ? 1 : 0;
  }
  EXPECT_NEAR(double(rejects) / runs, 0.05, 0.015);
}

TEST(AndersonDarling, QuantilesPassBimodalFails) {
  V q(50), bi;
  for (std::size_t i = 0; i < q.size(); ++i) {
    // Inverse normal CDF by bisection at plotting position (i + 0.5)/n.
    const double target = (double(i) + 0.5) / double(q.size());
    double lo = -10, hi = 10;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (normal_cdf(mid) < target ? lo : hi) = mid;
    }
    q[i] = 0.5 * (lo + hi);
  }
  const auto a = anderson_darling_normality(q);
  EXPECT_FALSE(a.reject);
  EXPECT_LT(a.a2_star, 0.2);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) bi.push_back((i % 2 ? 5.0 : -5.0) + 0.3 * rng.normal());
  EXPECT_TRUE(anderson_darling_normality(bi).reject);
  EXPECT_THROW(anderson_darling_normality(V(10, 1.0)), NumericalError);
  EXPECT_THROW(anderson_darling_normality(V{1, 2, 3}), std::invalid_argument);
}

TEST(Fdr, BenjaminiHochbergCases) {
  EXPECT_EQ(fdr_bh(V{0.01, 0.02, 0.03, 0.04, 0.05}, 0.05), std::vector<bool>(5, true));
  EXPECT_EQ(fdr_bh(V(4, 1.0), 0.05), std::vector<bool>(4, false));
  EXPECT_EQ(fdr_bh(V{0.04}, 0.05), std::vector<bool>{true});
  // Step-up: the largest qualifying rank carries smaller ones with it.
  EXPECT_EQ(fdr_bh(V{0.02, 0.5, 0.03, 0.011}, 0.05), (std::vector<bool>{true, false, true, true}));
  EXPECT_THROW(fdr_bh(V{1.5}, 0.05), std::invalid_argument);
}

TEST(Bonferroni, BoundaryAndCases) {
  EXPECT_EQ(bonferroni(V{0.01, 0.5, 0.5, 0.5, 0.5}, 0.05)[0], true);
  EXPECT_EQ(bonferroni(V{0.049}, 0.05), std::vector<bool>{true});
  EXPECT_EQ(bonferroni(V{0.02, 0.2}, 0.05), (std::vector<bool>{true, false}));
}

TEST(Fdr, SupersetOfBonferroni) {
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    V p(12);
    for (auto& v : p) v = std::pow(rng.uniform(), 3.0);
    const auto a = fdr_bh(p, 0.05), b = bonferroni(p, 0.05);
    for (std::size_t i = 0; i < p.size(); ++i)
      if (b[i]) EXPECT_TRUE(a[i]);
  }
}

TEST(Descriptive, Basics) {
  EXPECT_DOUBLE_EQ(mean(V{1, 2, 3}), 2.0);
  EXPECT_DOUBLE_EQ(stddev(V{1, 2, 3, 4, 5}), std::sqrt(2.5));
  EXPECT_DOUBLE_EQ(median(V{3, 1, 2, 10}), 2.5);
  EXPECT_DOUBLE_EQ(standard_error(V{1, 2, 3, 4, 5}), std::sqrt(0.5));
}

}  // namespace
}  // namespace pald::stats
