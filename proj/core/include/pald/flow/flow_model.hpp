// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pald/flow/ode.hpp"
#include "pald/numerics/adamw.hpp"
#include "pald/numerics/layers.hpp"

namespace pald::flow {

struct FlowConfig {
  std::size_t latent_dim = 8;
  std::size_t context_hidden = 64;
  std::size_t velocity_hidden = 64;
  std::size_t velocity_layers = 2;
  std::size_t time_features = 16;  // even
  double t_mean = 0.0;             // logit-normal training times
  double t_std = 1.0;
  double lr = 1e-4;
  double weight_decay = 0.0;
  std::size_t warmup = 500;
  std::size_t steps = 20000;
  std::size_t batch = 16;          // sequences per step
  std::size_t draws_per_frame = 1;
  std::size_t max_seq_len = 3125;
  double grad_clip = 1.0;          // 0 disables clipping
  double output_gain = 0.1;        // init scale of the last velocity layer

  void validate() const;
};

/// Causal GRU context network plus a velocity MLP on [x_τ, time features, context].
struct FlowModel {
  FlowConfig config;
  ParameterSet params;
  OptimizerState opt;
  GruCell context;
  Mlp velocity;

  static FlowModel create(const FlowConfig& config, std::uint64_t seed);
};

/// [sin(kπτ), cos(kπτ)] for k = 1..E/2, one row per τ.
RowMatrix time_features(std::span<const double> tau, std::size_t features);

/// Teacher-forced contexts for sequences [S, L, d]: row s·L + i summarises
/// frames 0..i−1 of sequence s (zeros for i = 0).
RowMatrix contexts(const FlowModel& model, const Tensor& sequences);

/// The model's field with fixed per-row contexts.
class ConditionalField final : public VelocityField {
 public:
  ConditionalField(const FlowModel& model, const RowMatrix& context_rows);
  std::size_t dim() const override { return model_.config.latent_dim; }
  RowMatrix velocity(const RowMatrix& x, double tau) const override;
  RowMatrix jvp(const RowMatrix& x, double tau, const RowMatrix& dir) const override;
  Eigen::VectorXd exact_divergence(const RowMatrix& x, double tau) const override;
  Eigen::VectorXd velocity_and_divergence(const RowMatrix& x, double tau, RowMatrix& v) const override;

 private:
  struct Forward {
    std::vector<RowMatrix> slope;  // tanh' per hidden layer
    RowMatrix out;
  };
  Forward forward(const RowMatrix& x, double tau) const;
  Eigen::VectorXd divergence_of(const Forward& f) const;

  const FlowModel& model_;
  RowMatrix ctx_pre_;  // context part of the first layer plus its bias
};

/// Per-row training noise: time and prior sample.
struct FlowNoise {
  std::vector<double> t;
  RowMatrix x1;
};

/// Rows are ordered (sequence, frame, draw). Draws t then x₁ row by row.
FlowNoise draw_flow_noise(const FlowConfig& config, std::size_t rows, Rng& rng);

/// Mean over rows of ‖v(x_t, t, c) − (x₁ − x₀)‖² without updating anything.
double flow_loss(const FlowModel& model, const Tensor& batch, const FlowNoise& noise);

/// Loss plus d loss / d parameter for every model parameter, no update.
double flow_loss_gradients(const FlowModel& model, const Tensor& batch, const FlowNoise& noise,
                           Gradients& grads);

/// One AdamW step; returns the loss before the update.
double flow_train_step(FlowModel& model, const Tensor& batch, Rng& rng);
double flow_train_step(FlowModel& model, const Tensor& batch, const FlowNoise& noise);

struct FlowTrainingLog {
  std::vector<double> step_loss;
};

/// Samples batches of sequences (random windows when longer than
/// max_seq_len) from data [N, L, d].
FlowTrainingLog train_flow(FlowModel& model, const Tensor& data, std::uint64_t seed);

struct IcOptions {
  double t_level = 0.0;
  std::size_t n_draws = 8;
  std::size_t ode_steps = 100;
  DivergenceSpec divergence{};
};

/// Information content −log p_t(x_t | context) in nats for every frame of
/// sequences [S, L, d], averaged over n_draws noise draws. Result is S × L.
/// Draws for sequence s come from a stream keyed by (seed, s) in frame order.
RowMatrix sequence_ic(const FlowModel& model, const Tensor& sequences, const IcOptions& options,
                      std::uint64_t seed);

}  // namespace pald::flow
