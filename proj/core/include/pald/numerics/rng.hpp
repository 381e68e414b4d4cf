// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "pald/numerics/tensor.hpp"

namespace pald {

/// Independent stream families. Each trainable or stochastic component draws
/// from its own family so that changing one consumer never shifts another.
enum class Stream : std::uint64_t {
  kInit = 1,
  kNoise = 2,
  kData = 3,
  kProbes = 4,
  kEval = 5,
};

/// SplitMix64 finalizer; used to derive stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seeded Mersenne-Twister (mt19937_64) generator.
///
/// Streams are derived as splitmix64(seed ^ splitmix64(purpose ^ splitmix64(index))),
/// so (seed, purpose, index) triples name reproducible, non-overlapping
/// sequences. Normal variates use std::normal_distribution, which makes
/// draws bit-identical for a fixed standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t seed, Stream purpose, std::uint64_t index = 0);

  /// A child generator seeded from this one's next output.
  Rng split() { return Rng(engine_()); }

  std::uint64_t next_u64() { return engine_(); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return normal_(engine_); }
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  double gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(engine_);
  }

  Tensor normal_tensor(Shape shape, double stddev = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace pald
