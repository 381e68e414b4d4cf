// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "pald/numerics/graph.hpp"
#include "pald/numerics/layers.hpp"

namespace pald {

struct OptimizerState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t step_count = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
};

/// One AdamW step over every parameter of `params` that has an entry in
/// `grads`; parameters without a gradient entry are left untouched (no decay).
///
/// Weight decay is decoupled: p ← p·(1 − lr·λ) − lr·m̂/(√v̂ + eps), with
/// bias-corrected moments m̂, v̂.
void adamw_update(ParameterSet& params, const Gradients& grads, OptimizerState& state);

/// Joint L2 norm of the gradients of `params`, summed in name order.
double global_norm(const ParameterSet& params, const Gradients& grads);
/// Rescales all gradients so their joint L2 norm is at most max_norm.
void clip_global_norm(const ParameterSet& params, Gradients& grads, double max_norm);

/// Linear warmup to `base`, then cosine decay to zero at `total` steps.
double warmup_cosine_lr(std::uint64_t step, std::uint64_t total, std::uint64_t warmup,
                        double base);

}  // namespace pald
