// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pald/numerics/graph.hpp"
#include "pald/numerics/rng.hpp"
#include "pald/numerics/tensor.hpp"

namespace pald {

/// Named parameter tensors, ordered lexicographically by name.
class ParameterSet {
 public:
  using Map = std::map<std::string, Tensor>;

  Tensor& add(const std::string& name, Tensor value);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  std::size_t size() const { return tensors_.size(); }
  /// Total number of scalar parameters.
  std::size_t numel() const;

  Map::iterator begin() { return tensors_.begin(); }
  Map::iterator end() { return tensors_.end(); }
  Map::const_iterator begin() const { return tensors_.begin(); }
  Map::const_iterator end() const { return tensors_.end(); }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  Map tensors_;
};

/// Binds parameters of a set onto a graph once per name. Names matching a
/// frozen prefix are bound as non-trainable.
class BoundParameters {
 public:
  BoundParameters(Graph& graph, const ParameterSet& params,
                  std::vector<std::string> frozen_prefixes = {})
      : graph_(graph), params_(params), frozen_(std::move(frozen_prefixes)) {}

  Var operator()(const std::string& name);
  Graph& graph() { return graph_; }
  const ParameterSet& params() const { return params_; }

 private:
  Graph& graph_;
  const ParameterSet& params_;
  std::vector<std::string> frozen_;
  std::map<std::string, Var> bound_;
};

/// y = x·W + b with W stored [in × out].
struct Dense {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;

  std::string weight_name() const { return name + ".weight"; }
  std::string bias_name() const { return name + ".bias"; }

  /// Adds W ~ N(0, gain²/in) and b = 0 to the set.
  void init(ParameterSet& params, Rng& rng, double gain = 1.0) const;
  Var forward(BoundParameters& p, Var x) const;
  RowMatrix evaluate(const ParameterSet& p, const RowMatrix& x) const;
};

/// Dense stack with tanh between layers and a linear output.
struct Mlp {
  std::vector<Dense> layers;

  static Mlp make(const std::string& name, std::size_t in,
                  const std::vector<std::size_t>& hidden, std::size_t out);
  std::size_t in() const { return layers.front().in; }
  std::size_t out() const { return layers.back().out; }

  void init(ParameterSet& params, Rng& rng, double output_gain = 1.0) const;
  Var forward(BoundParameters& p, Var x) const;
  RowMatrix evaluate(const ParameterSet& p, const RowMatrix& x) const;
};

/// Gated recurrent cell.
///
///   z  = σ(x·Wz + h·Uz + bz)
///   r  = σ(x·Wr + h·Ur + br)
///   n  = tanh(x·Wn + r ⊙ (h·Un) + bn)
///   h' = (1 − z) ⊙ n + z ⊙ h
struct GruCell {
  std::string name;
  std::size_t input = 0;
  std::size_t hidden = 0;

  void init(ParameterSet& params, Rng& rng) const;
  Var forward(BoundParameters& p, Var x, Var h) const;
  RowMatrix evaluate(const ParameterSet& p, const RowMatrix& x, const RowMatrix& h) const;
};

}  // namespace pald
