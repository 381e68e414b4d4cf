// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/numerics/graph.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pald/error.hpp"

namespace pald {

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::parameter(const Tensor& param, bool trainable) {
  Node n;
  n.value = param;
  n.source = &param;
  n.trainable = trainable;
  n.requires_grad = trainable;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::record(Tensor value, std::span<const Var> inputs, Backward backward,
                  std::string_view op_name) {
  if (!value.all_finite()) {
    throw NumericalError("non-finite value produced by op '" +
                         std::string(op_name) + "'");
  }
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.graph != this) throw std::invalid_argument("op mixes graphs");
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Tensor& Graph::grad_sink(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Gradients Graph::backward(Var loss) {
  if (loss.graph != this) throw std::invalid_argument("loss belongs to another graph");
  if (nodes_[loss.id].value.size() != 1) {
    throw std::invalid_argument("backward() requires a scalar loss, got shape " +
                                shape_string(nodes_[loss.id].value.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  grad_sink(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
    if (!n.grad.all_finite()) throw NumericalError("non-finite gradient during backward");
  }
  Gradients out;
  for (const Node& n : nodes_) {
    if (!n.source) continue;
    auto [it, inserted] = out.try_emplace(n.source, Tensor(n.value.shape(), 0.0));
    if (n.trainable && !n.grad.empty()) {
      auto& acc = it->second.storage();
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += n.grad[k];
    }
  }
  return out;
}

namespace ops {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
}

template <typename F>
Tensor map_values(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.cols() != bv.rows()) {
    throw std::invalid_argument("matmul: inner dimensions " +
                                shape_string(av.shape()) + " x " +
                                shape_string(bv.shape()));
  }
  Tensor out = Tensor::matrix(av.rows(), bv.cols());
  out.matrix().noalias() = av.matrix() * bv.matrix();
  const Var ins[] = {a, b};
  return g.record(std::move(out), ins, [a, b](Graph& g, std::size_t self) {
    const auto dc = g.grad(self).matrix();
    if (g.requires_grad(a)) {
      g.grad_sink(a.id).matrix().noalias() += dc * g.value(b).matrix().transpose();
    }
    if (g.requires_grad(b)) {
      g.grad_sink(b.id).matrix().noalias() += g.value(a).matrix().transpose() * dc;
    }
  }, "matmul");
}

Var add(Var a, Var b) {
  Graph& g = *a.graph;
  require_same_shape(g.value(a), g.value(b), "add");
  Tensor out = g.value(a);
  out.matrix() += g.value(b).matrix();
  const Var ins[] = {a, b};
  return g.record(std::move(out), ins, [a, b](Graph& g, std::size_t self) {
    for (Var v : {a, b}) {
      if (g.requires_grad(v)) g.grad_sink(v.id).matrix() += g.grad(self).matrix();
    }
  }, "add");
}

Var sub(Var a, Var b) {
  Graph& g = *a.graph;
  require_same_shape(g.value(a), g.value(b), "sub");
  Tensor out = g.value(a);
  out.matrix() -= g.value(b).matrix();
  const Var ins[] = {a, b};
  return g.record(std::move(out), ins, [a, b](Graph& g, std::size_t self) {
    if (g.requires_grad(a)) g.grad_sink(a.id).matrix() += g.grad(self).matrix();
    if (g.requires_grad(b)) g.grad_sink(b.id).matrix() -= g.grad(self).matrix();
  }, "sub");
}

Var mul(Var a, Var b) {
  Graph& g = *a.graph;
  require_same_shape(g.value(a), g.value(b), "mul");
  Tensor out = g.value(a);
  out.matrix().array() *= g.value(b).matrix().array();
  const Var ins[] = {a, b};
  return g.record(std::move(out), ins, [a, b](Graph& g, std::size_t self) {
    const auto dc = g.grad(self).matrix();
    if (g.requires_grad(a)) {
      g.grad_sink(a.id).matrix().array() += dc.array() * g.value(b).matrix().array();
    }
    if (g.requires_grad(b)) {
      g.grad_sink(b.id).matrix().array() += dc.array() * g.value(a).matrix().array();
    }
  }, "mul");
}

Var scale(Var a, double c) {
  Graph& g = *a.graph;
  Tensor out = g.value(a);
  out.matrix() *= c;
  const Var ins[] = {a};
  return g.record(std::move(out), ins, [a, c](Graph& g, std::size_t self) {
    g.grad_sink(a.id).matrix() += c * g.grad(self).matrix();
  }, "scale");
}

Var add_row(Var a, Var bias) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(bias);
  if (bv.size() != av.cols()) {
    throw std::invalid_argument("add_row: bias of size " + std::to_string(bv.size()) +
                                " for " + std::to_string(av.cols()) + " columns");
  }
  Tensor out = av;
  const Eigen::Map<const Eigen::RowVectorXd> b(bv.data().data(), Eigen::Index(bv.size()));
  out.matrix().rowwise() += b;
  const Var ins[] = {a, bias};
  return g.record(std::move(out), ins, [a, bias](Graph& g, std::size_t self) {
    const auto dc = g.grad(self).matrix();
    if (g.requires_grad(a)) g.grad_sink(a.id).matrix() += dc;
    if (g.requires_grad(bias)) {
      Tensor& gb = g.grad_sink(bias.id);
      Eigen::Map<Eigen::RowVectorXd> db(gb.data().data(), Eigen::Index(gb.size()));
      db += dc.colwise().sum();
    }
  }, "add_row");
}

Var mul_rows(Var a, std::span<const double> factors) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  if (factors.size() != av.rows()) throw std::invalid_argument("mul_rows: factor count");
  Eigen::Map<const Eigen::VectorXd> f(factors.data(), Eigen::Index(factors.size()));
  Tensor out = av;
  out.matrix() = f.asDiagonal() * av.matrix();
  Eigen::VectorXd fc = f;
  const Var ins[] = {a};
  return g.record(std::move(out), ins, [a, fc](Graph& g, std::size_t self) {
    g.grad_sink(a.id).matrix() += fc.asDiagonal() * g.grad(self).matrix();
  }, "mul_rows");
}

Var one_minus(Var a) {
  Graph& g = *a.graph;
  Tensor out = map_values(g.value(a), [](double v) { return 1.0 - v; });
  const Var ins[] = {a};
  return g.record(std::move(out), ins, [a](Graph& g, std::size_t self) {
    g.grad_sink(a.id).matrix() -= g.grad(self).matrix();
  }, "one_minus");
}

Var tanh(Var a) {
  Graph& g = *a.graph;
  Tensor out = map_values(g.value(a), [](double v) { return std::tanh(v); });
  const Var ins[] = {a};
  return g.record(std::move(out), ins, [a](Graph& g, std::size_t self) {
    const auto y = g.value(Var{&g, self}).matrix();
    const auto dc = g.grad(self).matrix();
    g.grad_sink(a.id).matrix().array() += dc.array() * (1.0 - y.array().square());
  }, "tanh");
}

Var sigmoid(Var a) {
  Graph& g = *a.graph;
  Tensor out = map_values(g.value(a), [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  const Var ins[] = {a};
  return g.record(std::move(out), ins, [a](Graph& g, std::size_t self) {
    const auto y = g.value(Var{&g, self}).matrix();
    const auto dc = g.grad(self).matrix();
    g.grad_sink(a.id).matrix().array() += dc.array() * y.array() * (1.0 - y.array());
  }, "sigmoid");
}

Var layer_norm(Var a) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  const std::size_t n = av.cols();
  if (n < 2) throw std::invalid_argument("layer_norm: axis extent must be >= 2");
  Tensor out = layer_norm(av, 1);
  // Per-row 1/σ, needed by backward.
  Eigen::VectorXd inv_std(static_cast<Eigen::Index>(av.rows()));
  const auto x = av.matrix();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    inv_std[r] = 1.0 / std::sqrt(var);
  }
  const Var ins[] = {a};
  return g.record(std::move(out), ins, [a, inv_std](Graph& g, std::size_t self) {
    const auto y = g.value(Var{&g, self}).matrix();
    const auto dy = g.grad(self).matrix();
    auto dx = g.grad_sink(a.id).matrix();
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double mean_dy = dy.row(r).mean();
      const double mean_dy_y = dy.row(r).dot(y.row(r)) / double(y.cols());
      dx.row(r).array() +=
          inv_std[r] * (dy.row(r).array() - mean_dy - y.row(r).array() * mean_dy_y);
    }
  }, "layer_norm");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Graph& g = *parts[0].graph;
  const std::size_t rows = g.value(parts[0]).rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (g.value(p).rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += g.value(p).cols();
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& pv = g.value(p);
    out.matrix().middleCols(Eigen::Index(off), Eigen::Index(pv.cols())) = pv.matrix();
    offsets.push_back(off);
    off += pv.cols();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return g.record(std::move(out), ins, [ins, offsets](Graph& g, std::size_t self) {
    const auto dc = g.grad(self).matrix();
    for (std::size_t i = 0; i < ins.size(); ++i) {
      if (!g.requires_grad(ins[i])) continue;
      Tensor& gs = g.grad_sink(ins[i].id);
      gs.matrix() += dc.middleCols(Eigen::Index(offsets[i]), Eigen::Index(gs.cols()));
    }
  }, "concat_cols");
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Graph& g = *parts[0].graph;
  const std::size_t cols = g.value(parts[0]).cols();
  std::size_t rows = 0;
  for (Var p : parts) {
    if (g.value(p).cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += g.value(p).rows();
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& pv = g.value(p);
    out.matrix().middleRows(Eigen::Index(off), Eigen::Index(pv.rows())) = pv.matrix();
    offsets.push_back(off);
    off += pv.rows();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return g.record(std::move(out), ins, [ins, offsets](Graph& g, std::size_t self) {
    const auto dc = g.grad(self).matrix();
    for (std::size_t i = 0; i < ins.size(); ++i) {
      if (!g.requires_grad(ins[i])) continue;
      Tensor& gs = g.grad_sink(ins[i].id);
      gs.matrix() += dc.middleRows(Eigen::Index(offsets[i]), Eigen::Index(gs.rows()));
    }
  }, "concat_rows");
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  if (start + count > av.cols()) throw std::invalid_argument("slice_cols: out of range");
  Tensor out = Tensor::matrix(av.rows(), count);
  out.matrix() = av.matrix().middleCols(Eigen::Index(start), Eigen::Index(count));
  const Var ins[] = {a};
  return g.record(std::move(out), ins, [a, start, count](Graph& g, std::size_t self) {
    g.grad_sink(a.id).matrix().middleCols(Eigen::Index(start), Eigen::Index(count)) +=
        g.grad(self).matrix();
  }, "slice_cols");
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  Tensor out = Tensor::matrix(rows.size(), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= av.rows()) throw std::invalid_argument("gather_rows: index out of range");
    out.matrix().row(Eigen::Index(i)) = av.matrix().row(Eigen::Index(rows[i]));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  const Var ins[] = {a};
  return g.record(std::move(out), ins, [a, idx](Graph& g, std::size_t self) {
    auto da = g.grad_sink(a.id).matrix();
    const auto dc = g.grad(self).matrix();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      da.row(Eigen::Index(idx[i])) += dc.row(Eigen::Index(i));
    }
  }, "gather_rows");
}

Var sum(Var a) {
  Graph& g = *a.graph;
  const Var ins[] = {a};
  return g.record(Tensor::scalar(g.value(a).matrix().sum()), ins,
                  [a](Graph& g, std::size_t self) {
                    g.grad_sink(a.id).matrix().array() += g.grad(self)[0];
                  }, "sum");
}

Var sum_squares(Var a) {
  Graph& g = *a.graph;
  const Var ins[] = {a};
  return g.record(Tensor::scalar(g.value(a).matrix().squaredNorm()), ins,
                  [a](Graph& g, std::size_t self) {
                    g.grad_sink(a.id).matrix() += 2.0 * g.grad(self)[0] * g.value(a).matrix();
                  }, "sum_squares");
}

Var weighted_sum_squares(Var a, std::span<const double> col_weights) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  if (col_weights.size() != av.cols()) {
    throw std::invalid_argument("weighted_sum_squares: weight count");
  }
  Eigen::RowVectorXd w =
      Eigen::Map<const Eigen::RowVectorXd>(col_weights.data(), Eigen::Index(col_weights.size()));
  const double value = (av.matrix().array().square().rowwise() * w.array()).sum();
  const Var ins[] = {a};
  return g.record(Tensor::scalar(value), ins, [a, w](Graph& g, std::size_t self) {
    const double s = 2.0 * g.grad(self)[0];
    g.grad_sink(a.id).matrix().array() +=
        s * (g.value(a).matrix().array().rowwise() * w.array());
  }, "weighted_sum_squares");
}

}  // namespace ops

Tensor layer_norm(const Tensor& x, std::size_t axis) {
  if (x.rank() > 2 || axis > 1) throw std::invalid_argument("layer_norm: rank-2 input, axis 0 or 1");
  RowMatrix m = x.matrix();
  if (axis == 0) m.transposeInPlace();
  if (m.cols() < 2) throw std::invalid_argument("layer_norm: axis extent must be >= 2");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mean = m.row(r).mean();
    m.row(r).array() -= mean;
    const double var = m.row(r).squaredNorm() / double(m.cols());
    if (!(var > std::numeric_limits<double>::min())) {
      throw NumericalError("layer_norm: zero variance along normalized axis");
    }
    m.row(r) /= std::sqrt(var);
  }
  if (axis == 0) m.transposeInPlace();
  Tensor out = Tensor::from_matrix(m);
  return out.reshaped(x.shape());
}

}  // namespace pald
