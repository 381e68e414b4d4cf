// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace pald::ae {

/// Importance weight per feature group: positive, non-increasing, Σw = K.
struct PerceptualWeights {
  std::vector<double> w;

  /// w_k ∝ k^(−alpha), k = 1..K, normalized so Σw = K.
  static PerceptualWeights power_law(std::size_t groups, double alpha);

  std::size_t groups() const { return w.size(); }
  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
  /// Each group weight repeated group_dim times (one per feature column).
  std::vector<double> column_weights(std::size_t group_dim) const;
};

}  // namespace pald::ae
