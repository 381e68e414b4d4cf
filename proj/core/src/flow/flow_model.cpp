// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/flow/flow_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pald/error.hpp"
#include "pald/numerics/graph.hpp"

namespace pald::flow {

void FlowConfig::validate() const {
  if (latent_dim == 0 || context_hidden == 0 || velocity_hidden == 0)
    throw std::invalid_argument("flow: dimensions must be positive");
  if (time_features == 0 || time_features % 2 != 0)
    throw std::invalid_argument("flow: time_features must be positive and even");
  if (!(t_std > 0.0)) throw std::invalid_argument("flow: t_std must be positive");
  if (!(lr > 0.0)) throw std::invalid_argument("flow: lr must be positive");
  if (batch == 0 || draws_per_frame == 0 || max_seq_len == 0)
    throw std::invalid_argument("flow: batch, draws and max_seq_len must be positive");
}

FlowModel FlowModel::create(const FlowConfig& config, std::uint64_t seed) {
  config.validate();
  FlowModel m;
  m.config = config;
  m.context = GruCell{"ctx", config.latent_dim, config.context_hidden};
  const std::vector<std::size_t> hidden(config.velocity_layers, config.velocity_hidden);
  m.velocity = Mlp::make("vel", config.latent_dim + config.time_features + config.context_hidden,
                         hidden, config.latent_dim);
  Rng rng = Rng::stream(seed, Stream::kInit);
  m.context.init(m.params, rng);
  m.velocity.init(m.params, rng, config.output_gain);
  m.opt.lr = config.lr;
  m.opt.weight_decay = config.weight_decay;
  return m;
}

RowMatrix time_features(std::span<const double> tau, std::size_t features) {
  RowMatrix out(static_cast<Eigen::Index>(tau.size()), Eigen::Index(features));
  for (std::size_t r = 0; r < tau.size(); ++r) {
    for (std::size_t k = 0; k < features / 2; ++k) {
      const double a = double(k + 1) * std::numbers::pi * tau[r];
      out(Eigen::Index(r), Eigen::Index(2 * k)) = std::sin(a);
      out(Eigen::Index(r), Eigen::Index(2 * k + 1)) = std::cos(a);
    }
  }
  return out;
}

namespace {

void check_sequences(const FlowModel& model, const Tensor& seqs) {
  if (seqs.rank() != 3 || seqs.shape()[2] != model.config.latent_dim)
    throw std::invalid_argument("flow: sequences must be [S, L, latent_dim], got " +
                                shape_string(seqs.shape()));
  if (!seqs.all_finite()) throw NumericalError("flow: non-finite input sequence");
}

// Frame i of every sequence as an S × d matrix.
RowMatrix frame_slice(const Tensor& seqs, std::size_t i) {
  const std::size_t S = seqs.shape()[0], L = seqs.shape()[1], d = seqs.shape()[2];
  RowMatrix out(static_cast<Eigen::Index>(S), Eigen::Index(d));
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t j = 0; j < d; ++j) out(Eigen::Index(s), Eigen::Index(j)) = seqs[(s * L + i) * d + j];
  return out;
}

}  // namespace

RowMatrix contexts(const FlowModel& model, const Tensor& sequences) {
  check_sequences(model, sequences);
  const std::size_t S = sequences.shape()[0], L = sequences.shape()[1];
  const auto H = Eigen::Index(model.config.context_hidden);
  RowMatrix out(static_cast<Eigen::Index>(S * L), H);
  RowMatrix h = RowMatrix::Zero(Eigen::Index(S), H);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t s = 0; s < S; ++s) out.row(Eigen::Index(s * L + i)) = h.row(Eigen::Index(s));
    if (i + 1 < L) h = model.context.evaluate(model.params, frame_slice(sequences, i), h);
  }
  return out;
}

// --- fast field --------------------------------------------------------------

ConditionalField::ConditionalField(const FlowModel& model, const RowMatrix& context_rows)
    : model_(model) {
  const auto& cfg = model.config;
  if (std::size_t(context_rows.cols()) != cfg.context_hidden)
    throw std::invalid_argument("ConditionalField: context width mismatch");
  const auto& first = model.velocity.layers.front();
  const auto w = model.params.at(first.weight_name()).matrix();
  const auto& b = model.params.at(first.bias_name());
  ctx_pre_ = context_rows * w.bottomRows(Eigen::Index(cfg.context_hidden));
  ctx_pre_.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.data().data(), Eigen::Index(b.size()));
}

ConditionalField::Forward ConditionalField::forward(const RowMatrix& x, double tau) const {
  const auto& cfg = model_.config;
  if (x.rows() != ctx_pre_.rows()) throw std::invalid_argument("ConditionalField: row count mismatch");
  const auto d = Eigen::Index(cfg.latent_dim), E = Eigen::Index(cfg.time_features);
  const auto& layers = model_.velocity.layers;
  const auto w0 = model_.params.at(layers.front().weight_name()).matrix();
  const double tau_arr[] = {tau};
  const RowMatrix temb = time_features(tau_arr, cfg.time_features);
  const Eigen::RowVectorXd t_pre = temb * w0.middleRows(d, E);

  Forward f;
  RowMatrix a = x * w0.topRows(d) + ctx_pre_;
  a.rowwise() += t_pre;
  RowMatrix h = a.array().tanh().matrix();
  f.slope.push_back((1.0 - h.array().square()).matrix());
  for (std::size_t l = 1; l < layers.size(); ++l) {
    a = layers[l].evaluate(model_.params, h);
    if (l + 1 == layers.size()) {
      f.out = std::move(a);
      break;
    }
    h = a.array().tanh().matrix();
    f.slope.push_back((1.0 - h.array().square()).matrix());
  }
  return f;
}

RowMatrix ConditionalField::velocity(const RowMatrix& x, double tau) const {
  return forward(x, tau).out;
}

RowMatrix ConditionalField::jvp(const RowMatrix& x, double tau, const RowMatrix& dir) const {
  const auto& layers = model_.velocity.layers;
  const auto d = Eigen::Index(model_.config.latent_dim);
  const Forward f = forward(x, tau);
  RowMatrix g = (dir * model_.params.at(layers.front().weight_name()).matrix().topRows(d))
                    .cwiseProduct(f.slope[0]);
  for (std::size_t l = 1; l < layers.size(); ++l) {
    g = g * model_.params.at(layers[l].weight_name()).matrix();
    if (l + 1 < layers.size()) g = g.cwiseProduct(f.slope[l]);
  }
  return g;
}

Eigen::VectorXd ConditionalField::divergence_of(const Forward& f) const {
  const auto& layers = model_.velocity.layers;
  const Eigen::Index d = Eigen::Index(model_.config.latent_dim);
  const auto w0x = model_.params.at(layers.front().weight_name()).matrix().topRows(d);
  const auto w_out = model_.params.at(layers.back().weight_name()).matrix();
  const Eigen::Index N = f.out.rows();
  // tr(J) = Σ_j (e_j·W0x ⊙ s0)·W1 ⊙ s1 ··· W_out[:, j]. With one or two hidden
  // layers the sum over j folds into a fixed matrix.
  if (f.slope.size() == 1) {
    const Eigen::VectorXd c = (w0x.transpose().cwiseProduct(w_out)).rowwise().sum();
    return f.slope[0] * c;
  }
  if (f.slope.size() == 2) {
    const auto w1 = model_.params.at(layers[1].weight_name()).matrix();
    const RowMatrix m = w1.cwiseProduct(w0x.transpose() * w_out.transpose());
    return ((f.slope[0] * m).cwiseProduct(f.slope[1])).rowwise().sum();
  }
  // Deeper nets: push all d basis tangents through at once.
  const Eigen::Index W0 = w0x.cols();
  RowMatrix g(d * N, W0);
  for (Eigen::Index j = 0; j < d; ++j)
    g.middleRows(j * N, N) = f.slope[0].array().rowwise() * w0x.row(j).array();
  for (std::size_t l = 1; l + 1 < layers.size(); ++l) {
    g = g * model_.params.at(layers[l].weight_name()).matrix();
    for (Eigen::Index j = 0; j < d; ++j) g.middleRows(j * N, N).array() *= f.slope[l].array();
  }
  Eigen::VectorXd div = Eigen::VectorXd::Zero(N);
  for (Eigen::Index j = 0; j < d; ++j) div += g.middleRows(j * N, N) * w_out.col(j);
  return div;
}

Eigen::VectorXd ConditionalField::exact_divergence(const RowMatrix& x, double tau) const {
  return divergence_of(forward(x, tau));
}

Eigen::VectorXd ConditionalField::velocity_and_divergence(const RowMatrix& x, double tau,
                                                          RowMatrix& v) const {
  Forward f = forward(x, tau);
  Eigen::VectorXd div = divergence_of(f);
  v = std::move(f.out);
  return div;
}

// --- training ---------------------------------------------------------------

FlowNoise draw_flow_noise(const FlowConfig& config, std::size_t rows, Rng& rng) {
  FlowNoise n;
  n.t.resize(rows);
  for (auto& t : n.t) {
    const double logit = rng.normal(config.t_mean, config.t_std);
    t = 1.0 / (1.0 + std::exp(-logit));
  }
  n.x1.resize(Eigen::Index(rows), Eigen::Index(config.latent_dim));
  for (Eigen::Index i = 0; i < n.x1.size(); ++i) n.x1.data()[i] = rng.normal();
  return n;
}

namespace {

struct LossGraph {
  Graph g;
  Var loss;
};

void build_loss(const FlowModel& model, const Tensor& batch, const FlowNoise& noise, LossGraph& lg) {
  check_sequences(model, batch);
  const auto& cfg = model.config;
  const std::size_t B = batch.shape()[0], L = batch.shape()[1], d = cfg.latent_dim;
  const std::size_t R = cfg.draws_per_frame, rows = B * L * R;
  if (noise.t.size() != rows || std::size_t(noise.x1.rows()) != rows)
    throw std::invalid_argument("flow: noise rows do not match batch");

  Graph& g = lg.g;
  BoundParameters p(g, model.params);
  Var h = g.constant(Tensor::matrix(B, cfg.context_hidden));
  std::vector<Var> per_frame;
  for (std::size_t i = 0; i < L; ++i) {
    per_frame.push_back(h);
    if (i + 1 < L) h = model.context.forward(p, g.constant(Tensor::from_matrix(frame_slice(batch, i))), h);
  }
  Var ctx_frame_major = ops::concat_rows(per_frame);  // row i·B + b
  std::vector<std::size_t> gather(rows);
  RowMatrix xt(static_cast<Eigen::Index>(rows), Eigen::Index(d)), target(static_cast<Eigen::Index>(rows), Eigen::Index(d));
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t k = 0; k < R; ++k) {
        const std::size_t r = (b * L + i) * R + k;
        gather[r] = i * B + b;
        const double t = noise.t[r];
        for (std::size_t j = 0; j < d; ++j) {
          const double x0 = batch[(b * L + i) * d + j];
          const double x1 = noise.x1(Eigen::Index(r), Eigen::Index(j));
          xt(Eigen::Index(r), Eigen::Index(j)) = (1.0 - t) * x0 + t * x1;
          target(Eigen::Index(r), Eigen::Index(j)) = x1 - x0;
        }
      }
    }
  }
  Var ctx = ops::gather_rows(ctx_frame_major, gather);
  const Var parts[] = {g.constant(Tensor::from_matrix(xt)),
                       g.constant(Tensor::from_matrix(time_features(noise.t, cfg.time_features))), ctx};
  Var v = model.velocity.forward(p, ops::concat_cols(parts));
  Var err = ops::sub(v, g.constant(Tensor::from_matrix(target)));
  lg.loss = ops::scale(ops::sum_squares(err), 1.0 / double(rows));
}

std::size_t noise_rows(const FlowModel& model, const Tensor& batch) {
  check_sequences(model, batch);
  return batch.shape()[0] * batch.shape()[1] * model.config.draws_per_frame;
}

}  // namespace

double flow_loss(const FlowModel& model, const Tensor& batch, const FlowNoise& noise) {
  LossGraph lg;
  build_loss(model, batch, noise, lg);
  return lg.loss.value()[0];
}

double flow_loss_gradients(const FlowModel& model, const Tensor& batch, const FlowNoise& noise,
                           Gradients& grads) {
  LossGraph lg;
  build_loss(model, batch, noise, lg);
  grads = lg.g.backward(lg.loss);
  return lg.loss.value()[0];
}

double flow_train_step(FlowModel& model, const Tensor& batch, const FlowNoise& noise) {
  LossGraph lg;
  build_loss(model, batch, noise, lg);
  const double loss = lg.loss.value()[0];
  if (!std::isfinite(loss)) throw NumericalError("flow: non-finite training loss");
  Gradients grads = lg.g.backward(lg.loss);
  if (model.config.grad_clip > 0.0) clip_global_norm(model.params, grads, model.config.grad_clip);
  model.opt.lr = warmup_cosine_lr(model.opt.step_count, model.config.steps, model.config.warmup,
                                  model.config.lr);
  adamw_update(model.params, grads, model.opt);
  return loss;
}

double flow_train_step(FlowModel& model, const Tensor& batch, Rng& rng) {
  const FlowNoise noise = draw_flow_noise(model.config, noise_rows(model, batch), rng);
  return flow_train_step(model, batch, noise);
}

FlowTrainingLog train_flow(FlowModel& model, const Tensor& data, std::uint64_t seed) {
  check_sequences(model, data);
  const auto& cfg = model.config;
  const std::size_t N = data.shape()[0], L = data.shape()[1], d = cfg.latent_dim;
  if (N == 0 || L == 0) throw std::invalid_argument("train_flow: empty data");
  const std::size_t W = std::min(L, cfg.max_seq_len);
  Rng data_rng = Rng::stream(seed, Stream::kData);
  Rng noise_rng = Rng::stream(seed, Stream::kNoise);
  FlowTrainingLog log;
  Tensor batch({cfg.batch, W, d});
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const std::size_t s = data_rng.index(N);
      const std::size_t off = W < L ? data_rng.index(L - W + 1) : 0;
      std::copy_n(data.data().begin() + std::ptrdiff_t((s * L + off) * d), W * d,
                  batch.data().begin() + std::ptrdiff_t(b * W * d));
    }
    log.step_loss.push_back(flow_train_step(model, batch, noise_rng));
  }
  return log;
}

// --- information content -----------------------------------------------------

RowMatrix sequence_ic(const FlowModel& model, const Tensor& sequences, const IcOptions& options,
                      std::uint64_t seed) {
  check_sequences(model, sequences);
  if (!(options.t_level >= 0.0 && options.t_level < 1.0))
    throw std::invalid_argument("sequence_ic: t_level must be in [0, 1)");
  if (options.n_draws == 0) throw std::invalid_argument("sequence_ic: n_draws must be positive");
  const std::size_t S = sequences.shape()[0], L = sequences.shape()[1], d = model.config.latent_dim;
  const std::size_t M = options.t_level > 0.0 ? options.n_draws : 1;
  const RowMatrix ctx = contexts(model, sequences);

  // Row (s·L + i)·M + k is draw k of frame i of sequence s.
  RowMatrix x(static_cast<Eigen::Index>(S * L * M), Eigen::Index(d));
  RowMatrix ctx_rows(x.rows(), ctx.cols());
  for (std::size_t s = 0; s < S; ++s) {
    Rng rng = Rng::stream(seed, Stream::kEval, s);
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t k = 0; k < M; ++k) {
        const auto r = Eigen::Index((s * L + i) * M + k);
        ctx_rows.row(r) = ctx.row(Eigen::Index(s * L + i));
        for (std::size_t j = 0; j < d; ++j) {
          const double x0 = sequences[(s * L + i) * d + j];
          x(r, Eigen::Index(j)) = (1.0 - options.t_level) * x0 + options.t_level * rng.normal();
        }
      }
    }
  }
  const ConditionalField field(model, ctx_rows);
  Rng probe_rng = Rng::stream(seed, Stream::kProbes);
  const Eigen::VectorXd logp =
      log_density(field, x, options.t_level, options.ode_steps, options.divergence, &probe_rng);
  RowMatrix ic = RowMatrix::Zero(Eigen::Index(S), Eigen::Index(L));
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t k = 0; k < M; ++k)
        ic(Eigen::Index(s), Eigen::Index(i)) -= logp[Eigen::Index((s * L + i) * M + k)] / double(M);
  return ic;
}

}  // namespace pald::flow
