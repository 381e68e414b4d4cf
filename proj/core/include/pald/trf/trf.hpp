// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pald/numerics/rng.hpp"
#include "pald/numerics/tensor.hpp"

namespace pald::trf {

struct LagWindow {
  double min_ms = -100.0;
  double max_ms = 700.0;
  /// Extra lags fitted on each side and dropped when predicting.
  double margin_ms = 50.0;

  void validate() const;
};

struct LagSet {
  std::vector<int> lags;      // in samples, ascending, margin included
  std::vector<bool> nominal;  // per lag: inside the nominal window
  std::size_t size() const { return lags.size(); }
  std::size_t nominal_count() const;
};

LagSet make_lags(const LagWindow& window, double sample_rate);

/// Column p·|lags| + ℓ holds predictor p delayed by lags[ℓ] samples (zero
/// where the delayed index falls outside the trial).
RowMatrix lagged_design(std::span<const std::vector<double>> predictors, const LagSet& lags);

/// Plain ridge: (XᵀX + λI)⁻¹ XᵀY, no centering or scaling.
Eigen::MatrixXd ridge_fit(const RowMatrix& x, const RowMatrix& y, double lambda);

/// Magnitude of the analytic signal.
std::vector<double> hilbert_envelope(std::span<const double> x);

/// Mean over consecutive blocks of `factor` samples (trailing partial block dropped).
std::vector<double> block_average(std::span<const double> x, std::size_t factor);

/// Each unvoiced run is replaced by one constant drawn uniformly within the
/// range of the voiced values.
std::vector<double> fill_unvoiced(std::span<const double> series, const std::vector<bool>& voiced, Rng& rng);

/// Per-trial sufficient statistics of a design X and responses Y.
struct TrialStats {
  Eigen::MatrixXd xx;  // XᵀX
  Eigen::VectorXd x;   // Xᵀ1
  Eigen::MatrixXd xy;  // XᵀY
  Eigen::VectorXd y;   // Yᵀ1
  Eigen::VectorXd yy;  // Σ y² per channel
  double n = 0.0;

  /// Statistics restricted to a subset of design columns.
  TrialStats select(std::span<const std::size_t> columns) const;
  TrialStats& operator+=(const TrialStats& o);
};

TrialStats trial_stats(const RowMatrix& x, const RowMatrix& y);

/// Weights in the original predictor units, one column per channel.
struct TrfFit {
  Eigen::MatrixXd weights;
  Eigen::VectorXd intercept;
};

/// Ridge on z-scored, mean-centred columns with one λ shared by all channels.
TrfFit fit_standardized(const TrialStats& train, double lambda);

/// Pearson r between Y and the prediction using only columns flagged in
/// `keep`, computed from the held-out trial's statistics.
Eigen::VectorXd prediction_r(const TrialStats& test, const TrfFit& fit, const std::vector<bool>& keep);

struct CvOptions {
  std::vector<double> lambda_grid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  /// Inner folds for λ selection over the non-held-out trials; 0 means
  /// leave-one-trial-out.
  std::size_t inner_folds = 6;
};

struct CvResult {
  RowMatrix r;       // trials × channels
  RowMatrix lambda;  // trials × channels, λ used for the held-out trial
};

/// Leave-one-trial-out r with λ chosen per channel by inner mean-r.
CvResult nested_cv(std::span<const TrialStats> trials, const std::vector<bool>& keep,
                   const CvOptions& options);

struct ChannelTest {
  double mean_delta = 0.0;
  double p = 1.0;
  bool normal = true;  // Anderson–Darling did not reject
  std::string test;    // "paired_t" or "wilcoxon"
  bool rejected = false;
  /// Rejected and mean Δr > 0.
  bool significant = false;
};

/// Paired comparison of full vs reduced per channel (rows are the paired
/// units), test chosen by normality of the differences, BH across channels.
std::vector<ChannelTest> compare_channels(const RowMatrix& full, const RowMatrix& reduced, double fdr_q);

struct EncodingOptions {
  LagWindow window{};
  double sample_rate = 64.0;
  CvOptions cv{};
  double fdr_q = 0.05;
};

struct ParticipantResult {
  CvResult full;
  CvResult reduced;
  std::vector<ChannelTest> channels;  // across trials
};

struct EncodingResult {
  std::vector<ParticipantResult> participants;
  std::vector<ChannelTest> channels;  // across participants (trial-mean r)
};

/// Full model [ic, envelope] against reduced model [envelope]. Each predictor
/// is z-scored over all trials before lagging.
/// eeg[p][trial] is T × channels and must match the predictor lengths.
EncodingResult delta_r_pipeline(std::span<const std::vector<double>> ic,
                                std::span<const std::vector<double>> envelope,
                                const std::vector<std::vector<RowMatrix>>& eeg,
                                const EncodingOptions& options);

}  // namespace pald::trf
