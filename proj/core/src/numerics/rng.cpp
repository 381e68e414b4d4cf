// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/numerics/rng.hpp"

namespace pald {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t seed, Stream purpose, std::uint64_t index) {
  const auto p = static_cast<std::uint64_t>(purpose);
  return Rng(seed ^ splitmix64(p ^ splitmix64(index)));
}

Tensor Rng::normal_tensor(Shape shape, double stddev) {
  Tensor t(std::move(shape));
  for (double& v : t.storage()) v = stddev * normal();
  return t;
}

}  // namespace pald
