// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/numerics/adamw.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pald/error.hpp"

namespace pald {

void adamw_update(ParameterSet& params, const Gradients& grads, OptimizerState& state) {
  // Validate before mutating anything.
  for (auto& [name, p] : params) {
    auto it = grads.find(&p);
    if (it == grads.end()) continue;
    if (it->second.shape() != p.shape()) {
      throw std::invalid_argument("adamw: gradient shape mismatch for '" + name + "'");
    }
    if (!it->second.all_finite()) {
      throw NumericalError("adamw: non-finite gradient for '" + name + "'");
    }
  }
  state.step_count += 1;
  const double t = double(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const double decay = 1.0 - state.lr * state.weight_decay;
  for (auto& [name, p] : params) {
    auto it = grads.find(&p);
    if (it == grads.end()) continue;
    const Tensor& g = it->second;
    Tensor& m = state.first_moment.try_emplace(name, Tensor(p.shape(), 0.0)).first->second;
    Tensor& v = state.second_moment.try_emplace(name, Tensor(p.shape(), 0.0)).first->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] = p[i] * decay - state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

double global_norm(const ParameterSet& params, const Gradients& grads) {
  double sq = 0.0;
  for (const auto& [name, p] : params) {
    auto it = grads.find(&p);
    if (it != grads.end()) sq += it->second.matrix().squaredNorm();
  }
  return std::sqrt(sq);
}

void clip_global_norm(const ParameterSet& params, Gradients& grads, double max_norm) {
  const double norm = global_norm(params, grads);
  if (norm <= max_norm || norm == 0.0) return;
  const double s = max_norm / norm;
  for (auto& [param, g] : grads) g.matrix() *= s;
}

double warmup_cosine_lr(std::uint64_t step, std::uint64_t total, std::uint64_t warmup,
                        double base) {
  if (step < warmup) return base * double(step + 1) / double(warmup);
  if (total <= warmup) return base;
  const double progress = std::min(1.0, double(step - warmup) / double(total - warmup));
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace pald
