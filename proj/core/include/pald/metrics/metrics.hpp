// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pald/numerics/rng.hpp"
#include "pald/numerics/tensor.hpp"

namespace pald::metrics {

/// SI-SDR ceiling reported for (numerically) perfect reconstructions.
inline constexpr double kSiSdrCapDb = 200.0;

/// Orthonormal basis Φ [dim × dim] whose columns are split into `groups`
/// consecutive blocks of `group_dim` columns (the feature groups).
struct FeatureMap {
  Tensor basis;
  std::size_t groups = 0;
  std::size_t group_dim = 0;

  std::size_t dim() const { return groups * group_dim; }
  /// Random orthonormal basis (QR of a Gaussian matrix).
  static FeatureMap random(std::size_t groups, std::size_t group_dim, Rng& rng);
  /// Coefficients x·Φ, one row per input row.
  RowMatrix project(const RowMatrix& x) const;
  /// Max |ΦᵀΦ − I|.
  double orthonormality_error() const;
};

/// Scale-invariant SDR in dB: α = ⟨ŝ,s⟩/‖s‖², 10·log10(‖αs‖² / ‖αs − ŝ‖²),
/// capped at kSiSdrCapDb.
double si_sdr(std::span<const double> reference, std::span<const double> estimate);

/// Per-group squared error Σ_rows ‖proj_k(x − x̂)‖².
std::vector<double> group_error(const RowMatrix& x, const RowMatrix& x_hat,
                                const FeatureMap& features);

/// One-sided periodogram averaged over non-overlapping frames of n_fft samples
/// (rectangular window). Returns n_fft/2 + 1 bins whose sum equals the mean
/// squared amplitude of the analysed samples. The trailing partial frame is
/// dropped.
std::vector<double> psd(std::span<const double> signal, std::size_t n_fft);

/// Expected psd() of white noise with the given variance: DC and Nyquist bins
/// carry var/n_fft, interior bins 2·var/n_fft.
std::vector<double> white_noise_psd(std::size_t n_fft, double variance);

/// Rescales a psd() result to white-noise units (unit white noise → 1 per bin).
std::vector<double> to_white_units(std::span<const double> one_sided, std::size_t n_fft);

}  // namespace pald::metrics
