// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/autoencoder/autoencoder.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pald/error.hpp"
#include "pald/numerics/graph.hpp"

namespace pald::ae {

const char* to_string(Bottleneck b) { return b == Bottleneck::kTanh ? "tanh" : "layernorm"; }

const char* to_string(NtMode m) {
  switch (m) {
    case NtMode::kNone: return "none";
    case NtMode::kED: return "ed";
    case NtMode::kD: return "d";
  }
  return "?";
}

Bottleneck bottleneck_from_string(const std::string& s) {
  if (s == "tanh") return Bottleneck::kTanh;
  if (s == "layernorm") return Bottleneck::kLayerNorm;
  throw std::invalid_argument("unknown bottleneck '" + s + "'");
}

NtMode nt_mode_from_string(const std::string& s) {
  if (s == "none") return NtMode::kNone;
  if (s == "ed") return NtMode::kED;
  if (s == "d") return NtMode::kD;
  throw std::invalid_argument("unknown nt mode '" + s + "'");
}

void AutoencoderConfig::validate() const {
  if (input_dim == 0 || latent_dim == 0 || hidden == 0)
    throw std::invalid_argument("autoencoder: dimensions must be positive");
  if (bottleneck == Bottleneck::kLayerNorm && latent_dim < 2)
    throw std::invalid_argument("autoencoder: layernorm bottleneck needs latent_dim >= 2");
  if (!(lr > 0.0)) throw std::invalid_argument("autoencoder: lr must be positive");
  if (batch == 0) throw std::invalid_argument("autoencoder: batch must be positive");
  schedule.validate();
}

AutoencoderModel AutoencoderModel::create(const AutoencoderConfig& config, std::uint64_t seed) {
  config.validate();
  AutoencoderModel m;
  m.config = config;
  const std::vector<std::size_t> hidden(config.hidden_layers, config.hidden);
  m.encoder = Mlp::make("enc", config.input_dim, hidden, config.latent_dim);
  m.decoder = Mlp::make("dec", config.latent_dim, hidden, config.input_dim);
  Rng rng = Rng::stream(seed, Stream::kInit);
  m.encoder.init(m.params, rng);
  m.decoder.init(m.params, rng);
  m.opt.lr = config.lr;
  m.opt.weight_decay = config.weight_decay;
  return m;
}

namespace {

RowMatrix apply_bottleneck(Bottleneck b, RowMatrix z) {
  if (b == Bottleneck::kTanh) return z.array().tanh().matrix();
  return layer_norm(Tensor::from_matrix(z), 1).matrix();
}

void check_input(const AutoencoderModel& model, const RowMatrix& x) {
  if (std::size_t(x.cols()) != model.config.input_dim)
    throw std::invalid_argument("autoencoder: input width mismatch");
  if (!x.allFinite()) throw NumericalError("autoencoder: non-finite input");
}

}  // namespace

RowMatrix encode(const AutoencoderModel& model, const RowMatrix& x) {
  check_input(model, x);
  return apply_bottleneck(model.config.bottleneck, model.encoder.evaluate(model.params, x));
}

RowMatrix decode(const AutoencoderModel& model, const RowMatrix& z) {
  if (std::size_t(z.cols()) != model.config.latent_dim)
    throw std::invalid_argument("autoencoder: latent width mismatch");
  return model.decoder.evaluate(model.params, z);
}

double perceptual_loss(const RowMatrix& x, const RowMatrix& x_hat, const PerceptualWeights& weights,
                       const metrics::FeatureMap& features) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
    throw std::invalid_argument("perceptual_loss: shape mismatch");
  if (weights.groups() != features.groups)
    throw std::invalid_argument("perceptual_loss: weight count != feature groups");
  const auto err = metrics::group_error(x, x_hat, features);
  double total = 0.0;
  for (std::size_t k = 0; k < err.size(); ++k) total += weights.w[k] * err[k];
  return total / double(x.rows());
}

RowMatrix training_latents(const RowMatrix& z, std::span<const double> t, double gamma,
                           std::uint64_t noise_seed) {
  if (std::size_t(z.rows()) != t.size()) throw std::invalid_argument("training_latents: t count");
  Rng rng(noise_seed);
  const Tensor n = noise::draw_noise({std::size_t(z.rows()), std::size_t(z.cols())}, gamma, rng);
  RowMatrix out(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c)
      out(r, c) = (1.0 - t[r]) * z(r, c) + t[r] * n.at(r, c);
  return out;
}

StepStats train_step(AutoencoderModel& model, const RowMatrix& batch, const PerceptualWeights& weights,
                     const metrics::FeatureMap& features, Rng& rng, std::optional<double> force_t) {
  check_input(model, batch);
  const auto& cfg = model.config;
  const std::size_t B = std::size_t(batch.rows());
  const bool noised = cfg.nt_mode != NtMode::kNone;

  std::vector<double> t(B, 0.0);
  if (noised) {
    for (auto& v : t) v = force_t ? *force_t : noise::sample_t(cfg.schedule, rng);
  }
  const std::uint64_t noise_seed = rng.next_u64();

  Graph g;
  std::vector<std::string> frozen;
  if (cfg.nt_mode == NtMode::kD) frozen.push_back("enc.");
  BoundParameters p(g, model.params, frozen);

  Var x = g.constant(Tensor::from_matrix(batch));
  Var z = model.encoder.forward(p, x);
  z = cfg.bottleneck == Bottleneck::kTanh ? ops::tanh(z) : ops::layer_norm(z);
  if (noised) {
    Rng nrng(noise_seed);
    Tensor n = noise::draw_noise({B, cfg.latent_dim}, cfg.schedule.gamma, nrng);
    std::vector<double> keep(B);
    for (std::size_t r = 0; r < B; ++r) {
      keep[r] = 1.0 - t[r];
      for (std::size_t c = 0; c < cfg.latent_dim; ++c) n.at(r, c) = t[r] * n.at(r, c);
    }
    z = ops::add(ops::mul_rows(z, keep), g.constant(std::move(n)));
  }
  Var x_hat = model.decoder.forward(p, z);
  Var diff = ops::matmul(ops::sub(x_hat, x), g.constant(features.basis));
  const auto col_w = weights.column_weights(features.group_dim);
  Var loss = ops::scale(ops::weighted_sum_squares(diff, col_w), 1.0 / double(B));

  StepStats stats;
  stats.loss = loss.value()[0];
  if (!std::isfinite(stats.loss)) throw NumericalError("autoencoder: non-finite loss");
  for (double v : t) stats.mean_t += v / double(B);
  stats.t = t;
  stats.noise_seed = noise_seed;

  Gradients grads = g.backward(loss);
  // Drop frozen entries so weight decay cannot touch the encoder either.
  if (cfg.nt_mode == NtMode::kD) {
    for (const auto& [name, param] : model.params)
      if (name.rfind("enc.", 0) == 0) grads.erase(&param);
  }
  if (cfg.grad_clip > 0.0) clip_global_norm(model.params, grads, cfg.grad_clip);
  model.opt.lr = warmup_cosine_lr(model.opt.step_count, cfg.steps, cfg.warmup, cfg.lr);
  adamw_update(model.params, grads, model.opt);
  return stats;
}

TrainingLog train_autoencoder(AutoencoderModel& model, const RowMatrix& train, const RowMatrix& eval,
                              const PerceptualWeights& weights, const metrics::FeatureMap& features,
                              std::uint64_t seed, const ProbeFn& probe, std::size_t probe_every) {
  const auto& cfg = model.config;
  if (train.rows() == 0) throw std::invalid_argument("train_autoencoder: empty training set");
  TrainingLog log;
  log.initial_clean_loss = perceptual_loss(eval, decode(model, encode(model, eval)), weights, features);
  Rng data_rng = Rng::stream(seed, Stream::kData);
  Rng noise_rng = Rng::stream(seed, Stream::kNoise);
  RowMatrix batch(static_cast<Eigen::Index>(cfg.batch), train.cols());
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (std::size_t b = 0; b < cfg.batch; ++b)
      batch.row(Eigen::Index(b)) = train.row(Eigen::Index(data_rng.index(std::size_t(train.rows()))));
    log.step_loss.push_back(train_step(model, batch, weights, features, noise_rng).loss);
    if (probe && probe_every > 0 && (step + 1) % probe_every == 0) probe(step + 1, model);
  }
  log.final_clean_loss = perceptual_loss(eval, decode(model, encode(model, eval)), weights, features);
  return log;
}

double latent_second_moment(const AutoencoderModel& model, const RowMatrix& x) {
  const RowMatrix z = encode(model, x);
  return z.squaredNorm() / double(z.size());
}

std::vector<SweepRow> reconstruction_sweep(const AutoencoderModel& model, const RowMatrix& x,
                                           const PerceptualWeights& weights,
                                           const metrics::FeatureMap& features,
                                           std::span<const double> snr_levels, std::size_t draws,
                                           std::uint64_t seed) {
  if (draws == 0) throw std::invalid_argument("reconstruction_sweep: draws must be positive");
  const RowMatrix z = encode(model, x);
  const double z_power = z.squaredNorm() / double(z.size());
  const double gamma = model.config.schedule.gamma;
  const Tensor zt = Tensor::from_matrix(z);
  const std::size_t N = std::size_t(x.rows()), K = features.groups;

  std::vector<SweepRow> rows;
  for (std::size_t level = 0; level < snr_levels.size(); ++level) {
    SweepRow row;
    row.snr = snr_levels[level];
    row.t = noise::t_of_snr(row.snr, z_power, gamma);
    row.group_error.assign(K, 0.0);
    const std::size_t n_draws = row.t == 0.0 ? 1 : draws;
    Rng seeds = Rng::stream(seed, Stream::kEval, level);
    for (std::size_t d = 0; d < n_draws; ++d) {
      const auto noised = noise::noise_latents(zt, row.t, gamma, seeds.next_u64());
      const RowMatrix x_hat = decode(model, noised.z_prime.matrix());
      const auto err = metrics::group_error(x, x_hat, features);
      for (std::size_t k = 0; k < K; ++k) row.group_error[k] += err[k] / double(N * n_draws);
      for (std::size_t i = 0; i < N; ++i) {
        const Eigen::RowVectorXd ref = x.row(Eigen::Index(i));
        const Eigen::RowVectorXd est = x_hat.row(Eigen::Index(i));
        row.si_sdr_db += metrics::si_sdr({ref.data(), std::size_t(ref.size())},
                                         {est.data(), std::size_t(est.size())}) /
                         double(N * n_draws);
      }
    }
    for (std::size_t k = 0; k < K; ++k) row.weighted_error += weights.w[k] * row.group_error[k];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace pald::ae
