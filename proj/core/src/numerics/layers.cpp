// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/numerics/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace pald {

Tensor& ParameterSet::add(const std::string& name, Tensor value) {
  auto [it, inserted] = tensors_.emplace(name, std::move(value));
  if (!inserted) throw std::invalid_argument("duplicate parameter '" + name + "'");
  return it->second;
}

Tensor& ParameterSet::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParameterSet::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterSet::numel() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.size();
  return n;
}

Var BoundParameters::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  bool trainable = true;
  for (const auto& prefix : frozen_) {
    if (name.rfind(prefix, 0) == 0) trainable = false;
  }
  Var v = graph_.parameter(params_.at(name), trainable);
  bound_.emplace(name, v);
  return v;
}

void Dense::init(ParameterSet& params, Rng& rng, double gain) const {
  params.add(weight_name(), rng.normal_tensor({in, out}, gain / std::sqrt(double(in))));
  params.add(bias_name(), Tensor({out}, 0.0));
}

Var Dense::forward(BoundParameters& p, Var x) const {
  return ops::add_row(ops::matmul(x, p(weight_name())), p(bias_name()));
}

RowMatrix Dense::evaluate(const ParameterSet& p, const RowMatrix& x) const {
  const Tensor& w = p.at(weight_name());
  const Tensor& b = p.at(bias_name());
  RowMatrix y = x * w.matrix();
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.data().data(), Eigen::Index(b.size()));
  return y;
}

Mlp Mlp::make(const std::string& name, std::size_t in,
              const std::vector<std::size_t>& hidden, std::size_t out) {
  Mlp m;
  std::size_t prev = in;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    m.layers.push_back({name + ".l" + std::to_string(i), prev, hidden[i]});
    prev = hidden[i];
  }
  m.layers.push_back({name + ".l" + std::to_string(hidden.size()), prev, out});
  return m;
}

void Mlp::init(ParameterSet& params, Rng& rng, double output_gain) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].init(params, rng, i + 1 == layers.size() ? output_gain : 1.0);
  }
}

Var Mlp::forward(BoundParameters& p, Var x) const {
  Var h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].forward(p, h);
    if (i + 1 < layers.size()) h = ops::tanh(h);
  }
  return h;
}

RowMatrix Mlp::evaluate(const ParameterSet& p, const RowMatrix& x) const {
  RowMatrix h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].evaluate(p, h);
    if (i + 1 < layers.size()) h = h.array().tanh().matrix();
  }
  return h;
}

void GruCell::init(ParameterSet& params, Rng& rng) const {
  const double sx = 1.0 / std::sqrt(double(input));
  const double sh = 1.0 / std::sqrt(double(hidden));
  for (const char* gate : {"z", "r", "n"}) {
    params.add(name + ".w_" + gate, rng.normal_tensor({input, hidden}, sx));
    params.add(name + ".u_" + gate, rng.normal_tensor({hidden, hidden}, sh));
    params.add(name + ".b_" + gate, Tensor({hidden}, 0.0));
  }
}

Var GruCell::forward(BoundParameters& p, Var x, Var h) const {
  auto pre = [&](const char* gate) {
    return ops::add_row(ops::add(ops::matmul(x, p(name + ".w_" + gate)),
                                 ops::matmul(h, p(name + ".u_" + gate))),
                        p(name + ".b_" + gate));
  };
  Var z = ops::sigmoid(pre("z"));
  Var r = ops::sigmoid(pre("r"));
  Var hn = ops::matmul(h, p(name + ".u_n"));
  Var n = ops::tanh(ops::add_row(
      ops::add(ops::matmul(x, p(name + ".w_n")), ops::mul(r, hn)), p(name + ".b_n")));
  return ops::add(ops::mul(ops::one_minus(z), n), ops::mul(z, h));
}

RowMatrix GruCell::evaluate(const ParameterSet& p, const RowMatrix& x,
                            const RowMatrix& h) const {
  auto bias = [&](const char* gate) {
    const Tensor& b = p.at(name + ".b_" + gate);
    return Eigen::Map<const Eigen::RowVectorXd>(b.data().data(), Eigen::Index(b.size()));
  };
  auto sigmoid = [](const RowMatrix& m) {
    return RowMatrix((1.0 + (-m.array()).exp()).inverse().matrix());
  };
  RowMatrix az = x * p.at(name + ".w_z").matrix() + h * p.at(name + ".u_z").matrix();
  az.rowwise() += bias("z");
  RowMatrix ar = x * p.at(name + ".w_r").matrix() + h * p.at(name + ".u_r").matrix();
  ar.rowwise() += bias("r");
  const RowMatrix z = sigmoid(az);
  const RowMatrix r = sigmoid(ar);
  RowMatrix an = x * p.at(name + ".w_n").matrix();
  an.array() += r.array() * (h * p.at(name + ".u_n").matrix()).array();
  an.rowwise() += bias("n");
  const RowMatrix n = an.array().tanh().matrix();
  return ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
}

}  // namespace pald
