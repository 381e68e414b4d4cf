// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "pald/numerics/layers.hpp"

namespace pald::exp {

inline constexpr char kCheckpointMagic[4] = {'P', 'A', 'L', 'D'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Parameters are stored as float32, so a roundtrip rounds every value to
/// 32-bit precision.
struct Checkpoint {
  ParameterSet params;
  /// Free-form `key = value` lines (config echo etc.). save() appends
  /// `content_hash = <sha1>` over the array section.
  std::string metadata;
};

/// Layout (little-endian): magic, u32 version, u32 metadata length, metadata
/// bytes, u32 array count, then per array in name order: u32 name length,
/// name, u32 rank, u64 dims[rank], f32 values.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copy of params with every value rounded through float32.
ParameterSet round_to_f32(const ParameterSet& params);

/// Replaces every tensor of `target` with the loaded one. Names and shapes
/// must match exactly.
void restore_params(ParameterSet& target, const ParameterSet& loaded);

/// Value of `key` in a metadata block, empty if absent.
std::string metadata_value(std::string_view metadata, std::string_view key);

}  // namespace pald::exp
