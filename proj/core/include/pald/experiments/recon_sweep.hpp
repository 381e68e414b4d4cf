// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "pald/experiments/config.hpp"

namespace pald::exp {

struct ReconData {
  metrics::FeatureMap features;
  RowMatrix train;
  RowMatrix eval;
};

ReconData make_recon_data(const ExperimentConfig& config);

struct TrainedAutoencoder {
  ae::AutoencoderModel model;
  ae::TrainingLog log;
};

/// Trains NT=NONE and NT=ED from the same initialization and batches. NT=D
/// starts from the NT=NONE model and fine-tunes the decoder on noised latents.
std::map<ae::NtMode, TrainedAutoencoder> train_autoencoders(const ExperimentConfig& config,
                                                            const ReconData& data);

struct ReconSweepResult {
  std::map<ae::NtMode, std::vector<ae::SweepRow>> tables;
  std::map<ae::NtMode, ae::TrainingLog> logs;
  std::string csv;
};

ReconSweepResult run_recon_sweep(const ExperimentConfig& config);

/// Columns: config_hash, seed, run_id, nt_mode, snr, t, group, weight,
/// group_error, weighted_error, si_sdr_db.
std::string recon_csv(const ExperimentConfig& config,
                      const std::map<ae::NtMode, std::vector<ae::SweepRow>>& tables);

}  // namespace pald::exp
