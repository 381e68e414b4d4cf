// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/autoencoder/perceptual.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pald::ae {

PerceptualWeights PerceptualWeights::power_law(std::size_t groups, double alpha) {
  if (groups == 0) throw std::invalid_argument("PerceptualWeights: need at least one group");
  if (!(alpha >= 0.0)) throw std::invalid_argument("PerceptualWeights: alpha must be >= 0");
  PerceptualWeights pw;
  pw.w.resize(groups);
  for (std::size_t k = 0; k < groups; ++k) pw.w[k] = std::pow(double(k + 1), -alpha);
  const double total = std::accumulate(pw.w.begin(), pw.w.end(), 0.0);
  for (auto& v : pw.w) v *= double(groups) / total;
  return pw;
}

void PerceptualWeights::validate() const {
  if (w.empty()) throw std::invalid_argument("PerceptualWeights: empty");
  double total = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!(w[k] > 0.0) || !std::isfinite(w[k]))
      throw std::invalid_argument("PerceptualWeights: weights must be positive and finite");
    if (k > 0 && w[k] > w[k - 1] * (1.0 + 1e-12))
      throw std::invalid_argument("PerceptualWeights: weights must be non-increasing");
    total += w[k];
  }
  if (std::abs(total - double(w.size())) > 1e-9 * double(w.size()))
    throw std::invalid_argument("PerceptualWeights: weights must sum to the group count");
}

std::vector<double> PerceptualWeights::column_weights(std::size_t group_dim) const {
  std::vector<double> out;
  out.reserve(w.size() * group_dim);
  for (double v : w) out.insert(out.end(), group_dim, v);
  return out;
}

}  // namespace pald::ae
