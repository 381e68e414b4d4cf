// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pald/autoencoder/autoencoder.hpp"
#include "pald/flow/flow_model.hpp"
#include "pald/synthdata/synthdata.hpp"
#include "pald/trf/trf.hpp"

namespace pald::exp {

enum class Kind { kReconSweep, kSurprisal, kEncoding };

const char* to_string(Kind k);

enum class NoteAggregate { kMean, kMax };

struct DataSection {
  std::size_t groups = 8;
  std::size_t group_dim = 8;
  std::size_t coeff_rank = 1;
  double coeff_decay = 0.0;  // coefficient std of group k is k^(−decay)
  double weight_alpha = 1.0;
  std::size_t n_train = 8192;
  std::size_t n_eval = 1024;
};

struct SweepSection {
  std::vector<double> snr_levels;  // defaults to the table levels
  std::size_t draws = 16;
  std::vector<ae::NtMode> modes = {ae::NtMode::kED, ae::NtMode::kD, ae::NtMode::kNone};
  std::size_t finetune_steps = 2000;  // decoder-only steps for NT=D
};

struct MelodySection {
  std::size_t n_pitches = 8;
  std::size_t notes = 32;
  std::size_t frames_per_note = 1;
  std::size_t latent_dim = 8;
  std::size_t pitch_dim = 4;
  double pitch_power = 1.0;
  double nuisance_power = 0.25;
  double dirichlet_alpha = 0.5;
  std::uint64_t rotation_seed = 7;
  bool normalize = true;
  std::size_t n_train = 512;
  std::size_t n_eval = 18;
  std::vector<synth::Construction> constructions = {synth::Construction::kAligned,
                                                    synth::Construction::kUnaligned};
};

struct IcSection {
  std::vector<double> t_grid;  // defaults to 0.1..0.9
  std::size_t n_draws = 8;
  std::size_t ode_steps = 100;
  flow::DivergenceMode divergence = flow::DivergenceMode::kExact;
  std::size_t probes = 1;
  NoteAggregate aggregate = NoteAggregate::kMean;
};

struct EegSection {
  synth::SyntheticEEGSpec spec{};
  synth::StimulusSpec stimulus{};
};

struct ExperimentConfig {
  Kind kind = Kind::kReconSweep;
  std::uint64_t seed = 0;
  std::string run_id = "run";
  std::size_t threads = 1;

  DataSection data{};
  ae::AutoencoderConfig ae{};
  SweepSection sweep{};
  MelodySection melody{};
  flow::FlowConfig flow{};
  IcSection ic{};
  EegSection eeg{};
  trf::EncodingOptions trf{};

  ExperimentConfig();

  /// Throws ConfigError when a combination of values is invalid.
  void validate() const;

  synth::HierarchicalSignalSpec signal_spec() const;
  ae::PerceptualWeights weights() const;
  /// Melody spec with its transition matrix drawn from the run seed.
  synth::MarkovMelodySpec melody_spec(synth::Construction c) const;
  ae::AutoencoderConfig ae_config(ae::NtMode mode) const;
  flow::FlowConfig flow_config() const;
  flow::IcOptions ic_options(double t) const;
};

/// Parses `section.key = value` lines. `#` starts a comment. Unknown keys,
/// duplicates and malformed values raise ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical serialization: every key, fixed order, shortest round-trip numbers.
std::string to_text(const ExperimentConfig& config);

/// First 16 hex digits of the SHA-1 of the canonical text (run.threads
/// excluded).
std::string config_hash(const ExperimentConfig& config);

std::string sha1_hex(std::string_view data);

/// Hash of a blob in the style of a git object id: SHA-1 of "blob <len>\0<data>".
std::string blob_hash(std::string_view data);

}  // namespace pald::exp
