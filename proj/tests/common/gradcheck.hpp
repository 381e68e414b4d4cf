// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "pald/numerics/graph.hpp"
#include "pald/numerics/layers.hpp"

namespace pald::testing {

/// Builds a scalar loss on a fresh graph from bound parameters.
using LossBuilder = std::function<Var(Graph&, BoundParameters&)>;

struct GradCheck {
  double max_rel_err = 0.0;
  std::string worst;  // "name[index]"
  std::size_t checked = 0;
};

/// |a − n| / max(|a|, |n|, floor). The floor keeps gradients that are
/// zero up to rounding from producing meaningless ratios.
inline double rel_err(double a, double n, double floor = 1e-3) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

inline double eval_loss(const ParameterSet& params, const LossBuilder& f) {
  Graph g;
  BoundParameters p(g, params);
  return f(g, p).value()[0];
}

/// Compares autodiff gradients against central differences with step h for
/// every scalar parameter.
inline GradCheck grad_check(ParameterSet& params, const LossBuilder& f, double h = 1e-5) {
  Gradients grads;
  {
    Graph g;
    BoundParameters p(g, params);
    grads = g.backward(f(g, p));
  }
  GradCheck out;
  for (auto& [name, tensor] : params) {
    const auto it = grads.find(&tensor);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double keep = tensor[i];
      tensor[i] = keep + h;
      const double up = eval_loss(params, f);
      tensor[i] = keep - h;
      const double down = eval_loss(params, f);
      tensor[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = it == grads.end() ? 0.0 : it->second[i];
      const double e = rel_err(analytic, numeric);
      if (e > out.max_rel_err) {
        out.max_rel_err = e;
        out.worst = name + "[" + std::to_string(i) + "]";
      }
      ++out.checked;
    }
  }
  return out;
}

}  // namespace pald::testing
