// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pald/numerics/tensor.hpp"

namespace pald {

class Graph;

/// Handle to a node recorded on a Graph.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

/// Gradient of a scalar loss keyed by the parameter tensor it was bound from.
using Gradients = std::unordered_map<const Tensor*, Tensor>;

/// Reverse-mode tape.
///
/// Nodes are appended in evaluation order, so the tape is always a
/// topological order of the computation and cannot contain cycles. A graph
/// is built for one forward pass and discarded after backward().
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Binds a parameter. Frozen parameters behave like constants and report a
  /// zero gradient.
  Var parameter(const Tensor& param, bool trainable = true);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Backpropagates from a 1-element loss and returns d loss / d parameter
  /// for every parameter bound to this graph.
  Gradients backward(Var loss);

  // Op-author interface.
  Var record(Tensor value, std::span<const Var> inputs, Backward backward,
             std::string_view op_name);
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  /// Gradient accumulator of a node, zero-initialised on first access.
  Tensor& grad_sink(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    const Tensor* source = nullptr;
    bool trainable = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

namespace ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
/// a + bias, bias broadcast over rows (bias has cols(a) elements).
Var add_row(Var a, Var bias);
/// Row i multiplied by factors[i].
Var mul_rows(Var a, std::span<const double> factors);
Var one_minus(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
/// Per-row standardization (mean 0, biased variance 1), no affine.
Var layer_norm(Var a);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var gather_rows(Var a, std::span<const std::size_t> rows);
Var sum(Var a);
Var sum_squares(Var a);
/// Σ_ij w_j a_ij².
Var weighted_sum_squares(Var a, std::span<const double> col_weights);

}  // namespace ops

/// Row-wise standardization outside of a graph. axis 1 normalizes each row,
/// axis 0 each column. Throws NumericalError on zero variance.
Tensor layer_norm(const Tensor& x, std::size_t axis = 1);

}  // namespace pald
