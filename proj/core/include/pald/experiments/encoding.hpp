// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "pald/experiments/config.hpp"
#include "pald/experiments/csv.hpp"

namespace pald::exp {

struct EncodingSummary {
  std::string construction;
  double t = 0.0;
  double mean_delta_coupled = 0.0;
  double mean_delta_uncoupled = 0.0;
  std::size_t significant_coupled = 0;    // group-level channels
  std::size_t significant_uncoupled = 0;
};

struct EncodingRunResult {
  std::vector<EncodingSummary> summary;
  std::string summary_csv;     // per (construction, t)
  std::string topography_csv;  // per (construction, t, channel), group level
  std::string results_csv;     // per (construction, t, participant, channel, trial)
};

/// Builds stimuli from the eval melodies in a surprisal series table, EEG
/// from the oracle IC, and runs the Δr pipeline for every (construction, t)
/// found in the table.
EncodingRunResult run_encoding(const ExperimentConfig& config, const CsvTable& series);

}  // namespace pald::exp
