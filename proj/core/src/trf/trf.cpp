// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/trf/trf.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "pald/error.hpp"
#include "pald/metrics/fft.hpp"
#include "pald/stats/stats.hpp"

namespace pald::trf {

void LagWindow::validate() const {
  if (!(max_ms > min_ms)) throw std::invalid_argument("trf: lag window max must exceed min");
  if (!(margin_ms >= 0.0)) throw std::invalid_argument("trf: margin must be >= 0");
}

std::size_t LagSet::nominal_count() const {
  return std::size_t(std::count(nominal.begin(), nominal.end(), true));
}

LagSet make_lags(const LagWindow& window, double sample_rate) {
  window.validate();
  if (!(sample_rate > 0.0)) throw std::invalid_argument("trf: sample rate must be positive");
  const int lo = int(std::lround(window.min_ms * sample_rate / 1000.0));
  const int hi = int(std::lround(window.max_ms * sample_rate / 1000.0));
  const int margin = int(std::lround(window.margin_ms * sample_rate / 1000.0));
  LagSet set;
  for (int l = lo - margin; l <= hi + margin; ++l) {
    set.lags.push_back(l);
    set.nominal.push_back(l >= lo && l <= hi);
  }
  return set;
}

RowMatrix lagged_design(std::span<const std::vector<double>> predictors, const LagSet& lags) {
  if (predictors.empty()) throw std::invalid_argument("lagged_design: no predictors");
  const std::size_t T = predictors.front().size(), nl = lags.size();
  RowMatrix x = RowMatrix::Zero(Eigen::Index(T), Eigen::Index(predictors.size() * nl));
  for (std::size_t p = 0; p < predictors.size(); ++p) {
    if (predictors[p].size() != T) throw std::invalid_argument("lagged_design: predictor length mismatch");
    for (std::size_t l = 0; l < nl; ++l) {
      const long lag = lags.lags[l];
      for (std::size_t t = 0; t < T; ++t) {
        const long src = long(t) - lag;
        if (src >= 0 && src < long(T)) x(Eigen::Index(t), Eigen::Index(p * nl + l)) = predictors[p][std::size_t(src)];
      }
    }
  }
  return x;
}

Eigen::MatrixXd ridge_fit(const RowMatrix& x, const RowMatrix& y, double lambda) {
  if (x.rows() != y.rows()) throw std::invalid_argument("ridge_fit: row mismatch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("ridge_fit: lambda must be >= 0");
  Eigen::MatrixXd a = x.transpose() * x;
  a.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("ridge_fit: system is not positive definite");
  return llt.solve(Eigen::MatrixXd(x.transpose() * y));
}

std::vector<double> hilbert_envelope(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  auto spec = metrics::fft_real(x);
  // Analytic signal: keep DC (and Nyquist for even n), double positive bins.
  for (std::size_t k = 1; k < n; ++k) {
    if (2 * k < n)
      spec[k] *= 2.0;
    else if (2 * k > n)
      spec[k] = 0.0;
  }
  const auto analytic = metrics::ifft(spec);
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(analytic[i]);
  return env;
}

std::vector<double> block_average(std::span<const double> x, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("block_average: factor must be positive");
  std::vector<double> out(x.size() / factor);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < factor; ++j) s += x[i * factor + j];
    out[i] = s / double(factor);
  }
  return out;
}

std::vector<double> fill_unvoiced(std::span<const double> series, const std::vector<bool>& voiced, Rng& rng) {
  if (series.size() != voiced.size()) throw std::invalid_argument("fill_unvoiced: length mismatch");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!voiced[i]) continue;
    lo = std::min(lo, series[i]);
    hi = std::max(hi, series[i]);
  }
  if (!(lo <= hi)) throw std::invalid_argument("fill_unvoiced: no voiced samples");
  std::vector<double> out(series.begin(), series.end());
  for (std::size_t i = 0; i < out.size();) {
    if (voiced[i]) {
      ++i;
      continue;
    }
    const double fill = lo + (hi - lo) * rng.uniform();
    for (; i < out.size() && !voiced[i]; ++i) out[i] = fill;
  }
  return out;
}

// --- sufficient statistics ---------------------------------------------------

TrialStats TrialStats::select(std::span<const std::size_t> columns) const {
  const auto m = Eigen::Index(columns.size());
  TrialStats s;
  s.xx.resize(m, m);
  s.x.resize(m);
  s.xy.resize(m, xy.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto ci = Eigen::Index(columns[std::size_t(i)]);
    s.x[i] = x[ci];
    s.xy.row(i) = xy.row(ci);
    for (Eigen::Index j = 0; j < m; ++j) s.xx(i, j) = xx(ci, Eigen::Index(columns[std::size_t(j)]));
  }
  s.y = y;
  s.yy = yy;
  s.n = n;
  return s;
}

TrialStats& TrialStats::operator+=(const TrialStats& o) {
  if (n == 0.0) return *this = o;
  xx += o.xx;
  x += o.x;
  xy += o.xy;
  y += o.y;
  yy += o.yy;
  n += o.n;
  return *this;
}

TrialStats trial_stats(const RowMatrix& x, const RowMatrix& y) {
  if (x.rows() != y.rows()) throw std::invalid_argument("trial_stats: row mismatch");
  if (x.rows() == 0) throw std::invalid_argument("trial_stats: empty trial");
  TrialStats s;
  s.xx = x.transpose() * x;
  s.x = x.colwise().sum().transpose();
  s.xy = x.transpose() * y;
  s.y = y.colwise().sum().transpose();
  s.yy = y.colwise().squaredNorm().transpose();
  s.n = double(x.rows());
  return s;
}

TrfFit fit_standardized(const TrialStats& train, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("trf: lambda must be >= 0");
  const Eigen::Index p = train.xx.rows();
  const double n = train.n;
  Eigen::MatrixXd g = train.xx - train.x * train.x.transpose() / n;
  Eigen::MatrixXd c = train.xy - train.x * train.y.transpose() / n;
  Eigen::VectorXd inv_sd(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double var = g(j, j) / n;
    inv_sd[j] = var > 1e-24 ? 1.0 / std::sqrt(var) : 0.0;  // constant columns drop out
  }
  Eigen::MatrixXd a = inv_sd.asDiagonal() * g * inv_sd.asDiagonal();
  a.diagonal().array() += lambda;
  for (Eigen::Index j = 0; j < p; ++j)
    if (inv_sd[j] == 0.0) a(j, j) = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("trf: ridge system is not positive definite");
  TrfFit fit;
  fit.weights = inv_sd.asDiagonal() * llt.solve(Eigen::MatrixXd(inv_sd.asDiagonal() * c));
  fit.intercept = (train.y - fit.weights.transpose() * train.x) / n;
  return fit;
}

Eigen::VectorXd prediction_r(const TrialStats& test, const TrfFit& fit, const std::vector<bool>& keep) {
  const Eigen::Index p = fit.weights.rows();
  if (std::size_t(p) != keep.size()) throw std::invalid_argument("prediction_r: mask size mismatch");
  Eigen::MatrixXd w = fit.weights;
  for (Eigen::Index j = 0; j < p; ++j)
    if (!keep[std::size_t(j)]) w.row(j).setZero();
  const double n = test.n;
  const Eigen::MatrixXd g = test.xx - test.x * test.x.transpose() / n;
  const Eigen::MatrixXd c = test.xy - test.x * test.y.transpose() / n;
  const Eigen::VectorXd vy = test.yy - test.y.cwiseProduct(test.y) / n;
  const Eigen::MatrixXd gw = g * w;
  Eigen::VectorXd r(w.cols());
  for (Eigen::Index ch = 0; ch < w.cols(); ++ch) {
    const double cov = w.col(ch).dot(c.col(ch));
    const double vp = w.col(ch).dot(gw.col(ch));
    r[ch] = (vp > 0.0 && vy[ch] > 0.0) ? cov / std::sqrt(vp * vy[ch]) : 0.0;
  }
  return r;
}

// --- cross-validation --------------------------------------------------------

namespace {

TrialStats sum_except(std::span<const TrialStats> trials, const std::vector<bool>& exclude) {
  TrialStats s;
  for (std::size_t i = 0; i < trials.size(); ++i)
    if (!exclude[i]) s += trials[i];
  return s;
}

}  // namespace

CvResult nested_cv(std::span<const TrialStats> trials, const std::vector<bool>& keep,
                   const CvOptions& options) {
  const std::size_t T = trials.size(), G = options.lambda_grid.size();
  if (T < 3) throw std::invalid_argument("nested_cv: need at least 3 trials");
  if (G == 0) throw std::invalid_argument("nested_cv: empty lambda grid");
  const auto C = trials.front().xy.cols();
  CvResult out{RowMatrix(Eigen::Index(T), C), RowMatrix(Eigen::Index(T), C)};

  for (std::size_t o = 0; o < T; ++o) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < T; ++i)
      if (i != o) rest.push_back(i);
    const std::size_t F =
        options.inner_folds == 0 ? rest.size() : std::min(options.inner_folds, rest.size());
    Eigen::MatrixXd score = Eigen::MatrixXd::Zero(Eigen::Index(G), C);
    for (std::size_t f = 0; f < F; ++f) {
      std::vector<bool> exclude(T, false);
      exclude[o] = true;
      std::vector<std::size_t> val;
      for (std::size_t k = f * rest.size() / F; k < (f + 1) * rest.size() / F; ++k) {
        val.push_back(rest[k]);
        exclude[rest[k]] = true;
      }
      const TrialStats train = sum_except(trials, exclude);
      for (std::size_t gi = 0; gi < G; ++gi) {
        const TrfFit fit = fit_standardized(train, options.lambda_grid[gi]);
        for (std::size_t v : val)
          score.row(Eigen::Index(gi)) += prediction_r(trials[v], fit, keep).transpose() / double(rest.size());
      }
    }
    std::vector<bool> exclude(T, false);
    exclude[o] = true;
    const TrialStats train = sum_except(trials, exclude);
    std::vector<Eigen::Index> best(std::size_t(C), 0);
    for (Eigen::Index ch = 0; ch < C; ++ch) score.col(ch).maxCoeff(&best[std::size_t(ch)]);
    for (std::size_t gi = 0; gi < G; ++gi) {
      if (std::find(best.begin(), best.end(), Eigen::Index(gi)) == best.end()) continue;
      const TrfFit fit = fit_standardized(train, options.lambda_grid[gi]);
      const Eigen::VectorXd r = prediction_r(trials[o], fit, keep);
      for (Eigen::Index ch = 0; ch < C; ++ch) {
        if (best[std::size_t(ch)] != Eigen::Index(gi)) continue;
        out.r(Eigen::Index(o), ch) = r[ch];
        out.lambda(Eigen::Index(o), ch) = options.lambda_grid[gi];
      }
    }
  }
  return out;
}

std::vector<ChannelTest> compare_channels(const RowMatrix& full, const RowMatrix& reduced, double fdr_q) {
  if (full.rows() != reduced.rows() || full.cols() != reduced.cols())
    throw std::invalid_argument("compare_channels: shape mismatch");
  const auto n = std::size_t(full.rows());
  std::vector<ChannelTest> out(std::size_t(full.cols()));
  std::vector<double> pvals;
  for (Eigen::Index ch = 0; ch < full.cols(); ++ch) {
    std::vector<double> a(n), b(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = full(Eigen::Index(i), ch);
      b[i] = reduced(Eigen::Index(i), ch);
      d[i] = a[i] - b[i];
    }
    auto& t = out[std::size_t(ch)];
    t.mean_delta = stats::mean(d);
    const bool degenerate = std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); });
    if (degenerate) {
      t.test = "none";
      t.p = d.front() == 0.0 ? 1.0 : 0.0;
    } else {
      t.normal = n < 8 || !stats::anderson_darling_normality(d).reject;
      if (t.normal) {
        t.test = "paired_t";
        t.p = stats::paired_t(a, b).p;
      } else {
        t.test = "wilcoxon";
        t.p = stats::wilcoxon_signed_rank(a, b).p;
      }
    }
    pvals.push_back(t.p);
  }
  const auto reject = stats::fdr_bh(pvals, fdr_q);
  for (std::size_t ch = 0; ch < out.size(); ++ch) {
    out[ch].rejected = reject[ch];
    out[ch].significant = reject[ch] && out[ch].mean_delta > 0.0;
  }
  return out;
}

namespace {

// Pooled z-score across trials, so zero padding of the lagged design sits at
// the predictor mean rather than at raw zero.
std::vector<std::vector<double>> zscore_pooled(std::span<const std::vector<double>> trials) {
  double s = 0.0, ss = 0.0, n = 0.0;
  for (const auto& tr : trials)
    for (double v : tr) {
      s += v;
      ss += v * v;
      n += 1.0;
    }
  const double mean = n > 0.0 ? s / n : 0.0;
  const double var = n > 0.0 ? std::max(ss / n - mean * mean, 0.0) : 0.0;
  const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
  std::vector<std::vector<double>> out(trials.size());
  for (std::size_t t = 0; t < trials.size(); ++t)
    for (double v : trials[t]) out[t].push_back((v - mean) / sd);
  return out;
}

}  // namespace

EncodingResult delta_r_pipeline(std::span<const std::vector<double>> ic,
                                std::span<const std::vector<double>> envelope,
                                const std::vector<std::vector<RowMatrix>>& eeg,
                                const EncodingOptions& options) {
  const std::size_t T = ic.size();
  if (envelope.size() != T) throw std::invalid_argument("delta_r_pipeline: predictor trial count mismatch");
  if (eeg.empty()) throw std::invalid_argument("delta_r_pipeline: no participants");
  const LagSet lags = make_lags(options.window, options.sample_rate);
  const std::size_t nl = lags.size();

  const auto ic_z = zscore_pooled(ic), env_z = zscore_pooled(envelope);
  std::vector<RowMatrix> designs;
  std::vector<TrialStats> shared;  // X-only parts
  for (std::size_t t = 0; t < T; ++t) {
    const std::vector<double> preds[] = {ic_z[t], env_z[t]};
    designs.push_back(lagged_design(preds, lags));
    shared.push_back(trial_stats(designs.back(), RowMatrix::Zero(designs.back().rows(), 1)));
  }
  std::vector<bool> keep_full(2 * nl), keep_reduced(nl);
  std::vector<std::size_t> env_cols(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    keep_full[l] = keep_full[nl + l] = keep_reduced[l] = lags.nominal[l];
    env_cols[l] = nl + l;
  }

  EncodingResult result;
  const auto C = eeg.front().empty() ? 0 : eeg.front().front().cols();
  RowMatrix mean_full(static_cast<Eigen::Index>(eeg.size()), C), mean_reduced(static_cast<Eigen::Index>(eeg.size()), C);
  for (std::size_t p = 0; p < eeg.size(); ++p) {
    if (eeg[p].size() != T) throw std::invalid_argument("delta_r_pipeline: trial count mismatch");
    std::vector<TrialStats> full, reduced;
    for (std::size_t t = 0; t < T; ++t) {
      const RowMatrix& y = eeg[p][t];
      if (y.rows() != designs[t].rows() || y.cols() != C)
        throw std::invalid_argument("delta_r_pipeline: EEG shape mismatch");
      TrialStats s = shared[t];
      s.xy = designs[t].transpose() * y;
      s.y = y.colwise().sum().transpose();
      s.yy = y.colwise().squaredNorm().transpose();
      reduced.push_back(s.select(env_cols));
      full.push_back(std::move(s));
    }
    ParticipantResult pr;
    pr.full = nested_cv(full, keep_full, options.cv);
    pr.reduced = nested_cv(reduced, keep_reduced, options.cv);
    pr.channels = compare_channels(pr.full.r, pr.reduced.r, options.fdr_q);
    mean_full.row(Eigen::Index(p)) = pr.full.r.colwise().mean();
    mean_reduced.row(Eigen::Index(p)) = pr.reduced.r.colwise().mean();
    result.participants.push_back(std::move(pr));
  }
  result.channels = compare_channels(mean_full, mean_reduced, options.fdr_q);
  return result;
}

}  // namespace pald::trf
