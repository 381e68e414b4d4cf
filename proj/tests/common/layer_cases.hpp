// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "pald/flow/flow_model.hpp"
#include "pald/numerics/rng.hpp"

namespace pald::testing {

struct GradCase {
  std::string name;
  ParameterSet params;
  LossBuilder loss;
};

/// sum(y ⊙ R) for a fixed random R, so every output element matters.
inline Var project(Graph& g, Var y, const Tensor& r) { return ops::sum(ops::mul(y, g.constant(r))); }

/// One case per layer kind with shapes drawn from `seed`.
inline std::vector<GradCase> layer_cases(std::uint64_t seed) {
  Rng rng(seed);
  auto dim = [&](std::size_t lo, std::size_t hi) { return lo + rng.index(hi - lo + 1); };
  std::vector<GradCase> cases;

  const std::size_t n = dim(1, 5), in = dim(2, 6), out = dim(2, 6);
  auto x = std::make_shared<Tensor>(rng.normal_tensor({n, in}));
  auto r = std::make_shared<Tensor>(rng.normal_tensor({n, out}));
  const Dense dense{"d", in, out};

  auto dense_case = [&](std::string name, Var (*act)(Var)) {
    GradCase c{std::move(name), {}, {}};
    dense.init(c.params, rng);
    // Non-zero biases so the bias path is exercised away from zero.
    for (auto& v : c.params.at("d.bias").storage()) v = 0.3 * rng.normal();
    c.loss = [dense, x, r, act](Graph& g, BoundParameters& p) {
      Var y = dense.forward(p, g.constant(*x));
      return project(g, act ? act(y) : y, *r);
    };
    cases.push_back(std::move(c));
  };
  dense_case("dense", nullptr);
  dense_case("tanh", &ops::tanh);
  dense_case("sigmoid", &ops::sigmoid);
  dense_case("layer_norm", &ops::layer_norm);

  {
    const std::size_t hidden = dim(2, 5), steps = dim(2, 4);
    GradCase c{"gru", {}, {}};
    const GruCell cell{"gru", in, hidden};
    cell.init(c.params, rng);
    auto xs = std::make_shared<std::vector<Tensor>>();
    for (std::size_t s = 0; s < steps; ++s) xs->push_back(rng.normal_tensor({n, in}));
    auto h0 = std::make_shared<Tensor>(rng.normal_tensor({n, hidden}, 0.5));
    auto rh = std::make_shared<Tensor>(rng.normal_tensor({n, hidden}));
    c.loss = [cell, xs, h0, rh](Graph& g, BoundParameters& p) {
      Var h = g.constant(*h0);
      for (const auto& xt : *xs) h = cell.forward(p, g.constant(xt), h);
      return project(g, h, *rh);
    };
    cases.push_back(std::move(c));
  }

  {
    // Velocity net on [x, time features, GRU context] as the flow model wires it.
    flow::FlowConfig cfg;
    cfg.latent_dim = dim(2, 4);
    cfg.context_hidden = dim(3, 6);
    cfg.velocity_hidden = dim(3, 6);
    cfg.velocity_layers = 2;
    cfg.time_features = 4;
    cfg.output_gain = 1.0;
    auto model = std::make_shared<flow::FlowModel>(flow::FlowModel::create(cfg, rng.next_u64()));
    GradCase c{"flow_velocity", model->params, {}};
    const std::size_t d = cfg.latent_dim, frames = 3;
    auto seq = std::make_shared<std::vector<Tensor>>();
    for (std::size_t f = 0; f < frames; ++f) seq->push_back(rng.normal_tensor({n, d}));
    std::vector<double> tau(n);
    for (auto& t : tau) t = rng.uniform();
    auto temb = std::make_shared<Tensor>(Tensor::from_matrix(flow::time_features(tau, cfg.time_features)));
    auto xt = std::make_shared<Tensor>(rng.normal_tensor({n, d}));
    auto rv = std::make_shared<Tensor>(rng.normal_tensor({n, d}));
    c.loss = [model, seq, temb, xt, rv, cfg](Graph& g, BoundParameters& p) {
      Var h = g.constant(Tensor::matrix(xt->rows(), cfg.context_hidden));
      for (const auto& f : *seq) h = model->context.forward(p, g.constant(f), h);
      const Var parts[] = {g.constant(*xt), g.constant(*temb), h};
      return project(g, model->velocity.forward(p, ops::concat_cols(parts)), *rv);
    };
    cases.push_back(std::move(c));
  }

  {
    // Remaining graph ops chained together.
    GradCase c{"ops", {}, {}};
    c.params.add("a", rng.normal_tensor({n, in}));
    c.params.add("b", rng.normal_tensor({n, in}));
    c.params.add("m", rng.normal_tensor({in, out}));
    std::vector<double> factors(n), colw(out + in);
    for (auto& f : factors) f = rng.normal();
    for (auto& w : colw) w = rng.uniform() + 0.1;
    std::vector<std::size_t> gather;
    for (std::size_t i = 0; i < 2 * n + 1; ++i) gather.push_back(rng.index(2 * n));
    c.loss = [=](Graph& g, BoundParameters& p) {
      Var a = p("a"), b = p("b");
      Var s = ops::sub(ops::mul(a, b), ops::scale(ops::one_minus(b), 0.7));
      s = ops::mul_rows(s, factors);
      const Var both[] = {s, a};
      Var stacked = ops::concat_rows(both);
      Var picked = ops::gather_rows(stacked, gather);
      Var prod = ops::matmul(picked, p("m"));
      const Var cols[] = {prod, picked};
      Var wide = ops::concat_cols(cols);
      Var left = ops::slice_cols(wide, 1, out);
      return ops::add(ops::scale(ops::weighted_sum_squares(wide, colw), 0.1),
                      ops::add(ops::sum_squares(left), ops::sum(ops::tanh(prod))));
    };
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace pald::testing
