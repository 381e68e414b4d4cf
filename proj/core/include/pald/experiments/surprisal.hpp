// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "pald/experiments/config.hpp"
#include "pald/experiments/csv.hpp"
#include "pald/stats/stats.hpp"

namespace pald::exp {

/// Melody latents for one construction. Pitch paths and nuisance draws are
/// shared across constructions for the same config.
struct MelodySplit {
  synth::MarkovMelodySpec spec;
  Tensor train;  // [n_train, frames, d]
  Tensor eval;   // [n_eval, frames, d]
  std::vector<std::vector<int>> eval_notes;  // n_eval × notes
};

MelodySplit make_melody_data(const ExperimentConfig& config, synth::Construction construction);

/// Collapses frame-level IC (S × frames) into note-level IC (S × notes).
RowMatrix note_ic(const RowMatrix& frame_ic, std::size_t frames_per_note, NoteAggregate aggregate);

struct CurvePoint {
  synth::Construction construction{};
  double t = 0.0;
  stats::CorrelationResult corr;
};

struct SurprisalEval {
  std::vector<CurvePoint> curve;
  std::vector<RowMatrix> frame_ic;  // per t, S × frames
};

/// IC of the eval split at every t in the grid, Spearman against the oracle.
SurprisalEval evaluate_surprisal(const ExperimentConfig& config, const MelodySplit& data,
                                 const flow::FlowModel& model);

struct SurprisalResult {
  std::vector<CurvePoint> curve;
  std::map<synth::Construction, flow::FlowModel> models;
  std::string curve_csv;   // config_hash, seed, run_id, construction, t_level, rho, p, significant
  std::string series_csv;  // one row per (construction, t, sequence, frame)
};

SurprisalResult run_surprisal(const ExperimentConfig& config);

/// Trains (or takes) one model per construction and evaluates it.
SurprisalResult run_surprisal(const ExperimentConfig& config,
                              std::map<synth::Construction, flow::FlowModel> models);

}  // namespace pald::exp
