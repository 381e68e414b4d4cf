// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pald/autoencoder/perceptual.hpp"
#include "pald/metrics/metrics.hpp"
#include "pald/numerics/rng.hpp"
#include "pald/numerics/tensor.hpp"

namespace pald::synth {

// ---------------------------------------------------------------------------
// Hierarchical signals: x = Σ_k Φ_k a_k over K orthonormal feature groups.

struct HierarchicalSignalSpec {
  std::size_t groups = 8;
  std::size_t group_dim = 8;
  ae::PerceptualWeights weights = ae::PerceptualWeights::power_law(8, 1.0);
  /// Standard deviation of the active coefficients of each group.
  std::vector<double> coeff_std = std::vector<double>(8, 1.0);
  /// Number of active (random) coefficients per group; the rest are zero.
  std::size_t coeff_rank = 1;
  /// Seeds the basis Φ.
  std::uint64_t seed = 0;

  std::size_t dim() const { return groups * group_dim; }
  void validate() const;
};

struct HierarchicalBatch {
  RowMatrix x;       // n × dim
  RowMatrix coeffs;  // n × dim, equals x·Φ
};

metrics::FeatureMap feature_map(const HierarchicalSignalSpec& spec);
HierarchicalBatch gen_hierarchical(const HierarchicalSignalSpec& spec, std::size_t n, Rng& rng);

// ---------------------------------------------------------------------------
// Markov melodies embedded as latent frame sequences.

enum class Construction { kAligned, kUnaligned };

const char* to_string(Construction c);
Construction construction_from_string(const std::string& s);

struct MarkovMelodySpec {
  std::size_t n_pitches = 8;
  RowMatrix transition;  // n_pitches × n_pitches, row-stochastic
  std::size_t seq_len = 32;
  std::size_t latent_dim = 8;
  std::size_t pitch_dim = 4;
  Construction construction = Construction::kAligned;
  double pitch_power = 1.0;
  double nuisance_power = 0.25;
  std::uint64_t rotation_seed = 7;
  /// Rescale frames to unit mean per-dimension power.
  bool normalize = true;

  void validate() const;
};

/// Rows drawn from a symmetric Dirichlet(alpha); small alpha gives sparse rows.
RowMatrix sparse_dirichlet_transition(std::size_t n_pitches, double alpha, Rng& rng);
std::vector<double> stationary_distribution(const RowMatrix& transition);

/// Unit pitch codes: pitch p < pitch_dim ↦ +e_p, otherwise −e_{p − pitch_dim}.
RowMatrix pitch_codes(std::size_t n_pitches, std::size_t pitch_dim);

struct MelodyData {
  Tensor latents;                          // [n_seqs, seq_len, latent_dim]
  std::vector<std::vector<int>> pitches;   // n_seqs × seq_len
};

std::vector<int> sample_pitch_path(const MarkovMelodySpec& spec, std::size_t length, Rng& rng);

/// Frames for a given pitch path (fresh nuisance from rng).
RowMatrix embed_pitches(const MarkovMelodySpec& spec, std::span<const int> pitches, Rng& rng);

MelodyData gen_melody_latents(const MarkovMelodySpec& spec, std::size_t n_seqs, Rng& rng);

/// Fixed linear map M [latent_dim × pitch_dim] with frame·M equal to the pitch
/// code of the frame (up to the construction's per-axis gain, which M undoes).
RowMatrix pitch_readout(const MarkovMelodySpec& spec);

/// −log T[p_{i−1}, p_i]; the first note uses the stationary distribution.
std::vector<double> oracle_ic(const MarkovMelodySpec& spec, std::span<const int> pitches);

// ---------------------------------------------------------------------------
// Stimulus waveforms and synthetic EEG.

struct StimulusSpec {
  double sample_rate = 64.0;      // EEG / predictor rate
  std::size_t audio_oversample = 16;
  double note_ms = 250.0;
  double rest_prob = 0.1;
  double rest_ms = 250.0;
};

struct Stimulus {
  std::vector<double> waveform;  // at sample_rate·audio_oversample
  std::vector<int> note_index;   // per predictor sample, −1 during rests
  std::vector<bool> voiced;      // per predictor sample
};

/// Sinusoidal notes with random loudness and a decaying amplitude envelope.
Stimulus gen_stimulus(std::span<const int> pitches, const StimulusSpec& spec, Rng& rng);

/// Holds each note's IC over its samples; unvoiced samples are 0 and flagged
/// false in the stimulus' voiced mask.
std::vector<double> note_ic_series(const Stimulus& stimulus, std::span<const double> note_ic);

struct SyntheticEEGSpec {
  std::size_t n_channels = 8;
  std::size_t n_coupled = 4;  // channels [0, n_coupled) respond to IC
  std::size_t n_participants = 20;
  std::size_t n_trials = 18;
  double sample_rate = 64.0;
  double noise_power = 1.0;
  double ic_gain = 1.0;
  double env_gain = 1.0;
  double lag_min_ms = -100.0;
  double lag_max_ms = 700.0;
  double kernel_peak_ms = 150.0;

  void validate() const;
};

/// Smooth biphasic kernel sampled at lags 0..support (positive peak at
/// peak_ms, negative trough after it), unit peak amplitude.
std::vector<double> biphasic_kernel(double sample_rate, double peak_ms, double support_ms);

struct ChannelKernels {
  std::vector<double> ic;        // per lag, lag 0 first
  std::vector<double> envelope;  // per lag, lag 0 first
};

/// Per-participant, per-channel kernels. Uncoupled channels get an all-zero
/// IC kernel.
std::vector<std::vector<ChannelKernels>> gen_kernels(const SyntheticEEGSpec& spec, Rng& rng);

struct TrialPredictors {
  std::vector<double> ic;
  std::vector<double> envelope;
};

/// eeg[participant][trial] is T × n_channels. Noise is 1/f shaped with the
/// configured variance.
std::vector<std::vector<RowMatrix>> gen_synthetic_eeg(
    const SyntheticEEGSpec& spec, std::span<const TrialPredictors> trials,
    const std::vector<std::vector<ChannelKernels>>& kernels, Rng& rng);

/// Causal FIR: y[t] = Σ_ℓ k[ℓ]·s[t − ℓ], zero before the start.
std::vector<double> convolve_causal(std::span<const double> signal, std::span<const double> kernel);

/// Zero-mean 1/f ("pink") noise with the given variance.
std::vector<double> pink_noise(std::size_t n, double variance, Rng& rng);

}  // namespace pald::synth
