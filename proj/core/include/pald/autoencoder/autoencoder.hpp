// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pald/autoencoder/perceptual.hpp"
#include "pald/metrics/metrics.hpp"
#include "pald/noise/noise.hpp"
#include "pald/numerics/adamw.hpp"
#include "pald/numerics/layers.hpp"
#include "pald/numerics/rng.hpp"

namespace pald::ae {

enum class Bottleneck { kTanh, kLayerNorm };
/// Which training paths see noised latents: none, encoder and decoder, or the
/// decoder only (encoder parameters frozen).
enum class NtMode { kNone, kED, kD };

const char* to_string(Bottleneck b);
const char* to_string(NtMode m);
Bottleneck bottleneck_from_string(const std::string& s);
NtMode nt_mode_from_string(const std::string& s);

struct AutoencoderConfig {
  std::size_t input_dim = 64;
  std::size_t latent_dim = 8;
  std::size_t hidden = 64;
  std::size_t hidden_layers = 2;
  Bottleneck bottleneck = Bottleneck::kLayerNorm;
  NtMode nt_mode = NtMode::kED;
  noise::NoiseSchedule schedule{};
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::size_t warmup = 200;
  std::size_t steps = 5000;
  std::size_t batch = 64;
  double grad_clip = 0.0;  // 0 disables clipping

  void validate() const;
};

struct AutoencoderModel {
  AutoencoderConfig config;
  ParameterSet params;
  OptimizerState opt;
  Mlp encoder;
  Mlp decoder;

  static AutoencoderModel create(const AutoencoderConfig& config, std::uint64_t seed);
};

RowMatrix encode(const AutoencoderModel& model, const RowMatrix& x);
RowMatrix decode(const AutoencoderModel& model, const RowMatrix& z);

/// Σ_k w_k ‖proj_k(x) − proj_k(x̂)‖², averaged over rows.
double perceptual_loss(const RowMatrix& x, const RowMatrix& x_hat, const PerceptualWeights& weights,
                       const metrics::FeatureMap& features);

struct StepStats {
  double loss = 0.0;  // before the update
  double mean_t = 0.0;
  std::vector<double> t;  // per row, all zero for NT=NONE
  std::uint64_t noise_seed = 0;
};

/// One optimizer step on a batch. Consumes from rng: one t per row (noised
/// modes), then one 64-bit noise seed. force_t replaces the per-row draws.
StepStats train_step(AutoencoderModel& model, const RowMatrix& batch, const PerceptualWeights& weights,
                     const metrics::FeatureMap& features, Rng& rng,
                     std::optional<double> force_t = std::nullopt);

/// The noised latents train_step feeds the decoder for the given draws.
RowMatrix training_latents(const RowMatrix& z, std::span<const double> t, double gamma,
                           std::uint64_t noise_seed);

struct TrainingLog {
  std::vector<double> step_loss;
  double initial_clean_loss = 0.0;
  double final_clean_loss = 0.0;
};

using ProbeFn = std::function<void(std::size_t step, const AutoencoderModel&)>;

TrainingLog train_autoencoder(AutoencoderModel& model, const RowMatrix& train, const RowMatrix& eval,
                              const PerceptualWeights& weights, const metrics::FeatureMap& features,
                              std::uint64_t seed, const ProbeFn& probe = {},
                              std::size_t probe_every = 0);

/// E[z²] over rows and latent dimensions.
double latent_second_moment(const AutoencoderModel& model, const RowMatrix& x);

struct SweepRow {
  double snr = 0.0;
  double t = 0.0;
  std::vector<double> group_error;  // mean over examples
  double weighted_error = 0.0;
  double si_sdr_db = 0.0;           // mean over examples and draws
};

/// Reconstruction quality of decode(noise(encode(x))) at each SNR level.
std::vector<SweepRow> reconstruction_sweep(const AutoencoderModel& model, const RowMatrix& x,
                                           const PerceptualWeights& weights,
                                           const metrics::FeatureMap& features,
                                           std::span<const double> snr_levels, std::size_t draws,
                                           std::uint64_t seed);

}  // namespace pald::ae
