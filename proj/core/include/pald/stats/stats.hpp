// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pald::stats {

inline constexpr double kDefaultAlpha = 0.05;

struct CorrelationResult {
  double rho = 0.0;
  double p = 1.0;  // two-sided, t-approximation with n − 2 dof
  bool significant = false;
};

struct TestResult {
  double statistic = 0.0;
  double p = 1.0;  // two-sided
};

struct WilcoxonResult {
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p = 1.0;  // two-sided
  std::size_t n_nonzero = 0;
  bool exact = false;
};

struct NormalityResult {
  double a2 = 0.0;       // A²
  double a2_star = 0.0;  // A²·(1 + 0.75/n + 2.25/n²)
  bool reject = false;   // at the 5% level
};

/// A*² critical value at α = 0.05 for a normal sample with estimated mean and
/// variance.
inline constexpr double kAndersonDarlingCritical5 = 0.752;

double mean(std::span<const double> x);
/// Sample standard deviation (n − 1 denominator).
double stddev(std::span<const double> x);
double standard_error(std::span<const double> x);
double median(std::span<const double> x);

double normal_cdf(double z);
double student_t_cdf(double t, double dof);
/// Two-sided tail probability of |T| ≥ |t| under Student-t(dof).
double student_t_two_sided(double t, double dof);

/// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> ranks(std::span<const double> x);

double pearson(std::span<const double> x, std::span<const double> y);
/// Pearson correlation of average ranks, flagged at `alpha`.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y,
                           double alpha = kDefaultAlpha);

/// Paired Student t on x − y with n − 1 dof.
TestResult paired_t(std::span<const double> x, std::span<const double> y);

/// Wilcoxon signed-rank on x − y. Zero differences are dropped. Exact
/// enumeration of sign assignments for n ≤ 12, otherwise the normal
/// approximation with tie and continuity corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

/// Anderson–Darling normality test with mean and variance estimated.
NormalityResult anderson_darling_normality(std::span<const double> x);

/// Benjamini–Hochberg step-up at level q.
std::vector<bool> fdr_bh(std::span<const double> p_values, double q);

/// Rejects where p ≤ alpha / m (inclusive tie rule).
std::vector<bool> bonferroni(std::span<const double> p_values, double alpha);

}  // namespace pald::stats
