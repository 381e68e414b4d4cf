// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/stats/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "pald/error.hpp"

namespace pald::stats {
namespace {

void require_paired(std::span<const double> x, std::span<const double> y, const char* who) {
  if (x.size() != y.size()) {
    throw std::invalid_argument(std::string(who) + ": samples differ in length");
  }
}

constexpr std::size_t kWilcoxonExactLimit = 12;

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("stddev needs n >= 2");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / double(x.size() - 1));
}

double standard_error(std::span<const double> x) {
  return stddev(x) / std::sqrt(double(x.size()));
}

double median(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("median of empty sample");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double normal_cdf(double z) {
  return boost::math::cdf(boost::math::normal_distribution<double>(), z);
}

double student_t_cdf(double t, double dof) {
  return boost::math::cdf(boost::math::students_t_distribution<double>(dof), t);
}

double student_t_two_sided(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t_distribution<double> dist(dof);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "pearson");
  if (x.size() < 3) throw std::invalid_argument("pearson: need n >= 3");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw NumericalError("pearson: degenerate variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y, double alpha) {
  require_paired(x, y, "spearman");
  if (x.size() < 3) throw std::invalid_argument("spearman: need n >= 3");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  CorrelationResult out;
  out.rho = pearson(rx, ry);
  const double n = double(x.size());
  if (std::fabs(out.rho) >= 1.0) {
    out.p = 0.0;
  } else {
    const double t = out.rho * std::sqrt((n - 2.0) / (1.0 - out.rho * out.rho));
    out.p = student_t_two_sided(t, n - 2.0);
  }
  out.significant = out.p < alpha;
  return out;
}

TestResult paired_t(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "paired_t");
  if (x.size() < 2) throw std::invalid_argument("paired_t: need n >= 2");
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = x[i] - y[i];
  const double sd = stddev(d);
  if (!(sd > 0.0)) throw NumericalError("paired_t: zero-variance differences");
  const double t = mean(d) / (sd / std::sqrt(double(d.size())));
  return {t, student_t_two_sided(t, double(d.size() - 1))};
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "wilcoxon_signed_rank");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  }
  if (d.empty()) throw std::invalid_argument("wilcoxon_signed_rank: all differences are zero");
  std::vector<double> mag(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) mag[i] = std::fabs(d[i]);
  const auto r = ranks(mag);

  WilcoxonResult out;
  out.n_nonzero = d.size();
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? out.w_plus : out.w_minus) += r[i];

  const std::size_t n = d.size();
  if (n <= kWilcoxonExactLimit) {
    out.exact = true;
    const std::size_t total = std::size_t{1} << n;
    std::size_t le = 0, ge = 0;
    constexpr double tol = 1e-9;
    for (std::size_t mask = 0; mask < total; ++mask) {
      double w = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1U) w += r[i];
      }
      if (w <= out.w_plus + tol) ++le;
      if (w >= out.w_plus - tol) ++ge;
    }
    out.p = std::min(1.0, 2.0 * double(std::min(le, ge)) / double(total));
    return out;
  }

  const double nn = double(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  auto sorted = mag;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = double(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  const double z = std::max(0.0, std::fabs(out.w_plus - mu) - 0.5) / std::sqrt(var);
  out.p = std::min(1.0, 2.0 * (1.0 - normal_cdf(z)));
  return out;
}

NormalityResult anderson_darling_normality(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 8) throw std::invalid_argument("anderson_darling_normality: need n >= 8");
  const double m = mean(x);
  const double s = stddev(x);
  if (!(s > 0.0)) throw NumericalError("anderson_darling_normality: degenerate sample");
  std::vector<double> z(x.begin(), x.end());
  std::sort(z.begin(), z.end());
  const boost::math::normal_distribution<double> std_normal;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = (z[i] - m) / s;
    const double hi = (z[n - 1 - i] - m) / s;
    // log Φ(lo) + log(1 − Φ(hi)) via complements for tail accuracy.
    const double log_cdf = std::log(boost::math::cdf(std_normal, lo));
    const double log_sf = std::log(boost::math::cdf(boost::math::complement(std_normal, hi)));
    acc += double(2 * i + 1) * (log_cdf + log_sf);
  }
  NormalityResult out;
  const double nn = double(n);
  out.a2 = -nn - acc / nn;
  out.a2_star = out.a2 * (1.0 + 0.75 / nn + 2.25 / (nn * nn));
  out.reject = out.a2_star > kAndersonDarlingCritical5;
  return out;
}

std::vector<bool> fdr_bh(std::span<const double> p_values, double q) {
  const std::size_t m = p_values.size();
  std::vector<bool> reject(m, false);
  if (m == 0) return reject;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::size_t k = 0;  // number of rejections
  for (std::size_t i = 0; i < m; ++i) {
    const double p = p_values[order[i]];
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("fdr_bh: p-value outside [0,1]");
    if (p <= double(i + 1) * q / double(m)) k = i + 1;
  }
  for (std::size_t i = 0; i < k; ++i) reject[order[i]] = true;
  return reject;
}

std::vector<bool> bonferroni(std::span<const double> p_values, double alpha) {
  const std::size_t m = p_values.size();
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    if (p_values[i] < 0.0 || p_values[i] > 1.0) {
      throw std::invalid_argument("bonferroni: p-value outside [0,1]");
    }
    reject[i] = p_values[i] <= alpha / double(m);
  }
  return reject;
}

}  // namespace pald::stats
