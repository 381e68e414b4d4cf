// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/experiments/surprisal.hpp"

#include <algorithm>

#include "pald/experiments/parallel.hpp"

namespace pald::exp {

namespace {

std::vector<std::vector<int>> pitch_paths(const synth::MarkovMelodySpec& spec, std::size_t n,
                                          std::size_t notes, Rng& rng) {
  std::vector<std::vector<int>> out;
  for (std::size_t s = 0; s < n; ++s) out.push_back(synth::sample_pitch_path(spec, notes, rng));
  return out;
}

Tensor embed_all(const synth::MarkovMelodySpec& spec, const std::vector<std::vector<int>>& notes,
                 std::size_t frames_per_note, Rng& rng) {
  const std::size_t frames = spec.seq_len, d = spec.latent_dim;
  Tensor out({notes.size(), frames, d});
  for (std::size_t s = 0; s < notes.size(); ++s) {
    std::vector<int> per_frame;
    for (int p : notes[s]) per_frame.insert(per_frame.end(), frames_per_note, p);
    const RowMatrix f = synth::embed_pitches(spec, per_frame, rng);
    std::copy(f.data(), f.data() + frames * d, out.data().begin() + std::ptrdiff_t(s * frames * d));
  }
  return out;
}

}  // namespace

MelodySplit make_melody_data(const ExperimentConfig& config, synth::Construction construction) {
  MelodySplit m;
  m.spec = config.melody_spec(construction);
  m.spec.validate();
  Rng train_paths = Rng::stream(config.seed, Stream::kData, 10);
  Rng eval_paths = Rng::stream(config.seed, Stream::kData, 11);
  Rng train_nuisance = Rng::stream(config.seed, Stream::kData, 12);
  Rng eval_nuisance = Rng::stream(config.seed, Stream::kData, 13);
  const auto train_notes = pitch_paths(m.spec, config.melody.n_train, config.melody.notes, train_paths);
  m.eval_notes = pitch_paths(m.spec, config.melody.n_eval, config.melody.notes, eval_paths);
  m.train = embed_all(m.spec, train_notes, config.melody.frames_per_note, train_nuisance);
  m.eval = embed_all(m.spec, m.eval_notes, config.melody.frames_per_note, eval_nuisance);
  return m;
}

RowMatrix note_ic(const RowMatrix& frame_ic, std::size_t frames_per_note, NoteAggregate aggregate) {
  if (frames_per_note == 0 || frame_ic.cols() % Eigen::Index(frames_per_note) != 0)
    throw std::invalid_argument("note_ic: frame count is not a multiple of frames_per_note");
  const auto k = Eigen::Index(frames_per_note);
  RowMatrix out(frame_ic.rows(), frame_ic.cols() / k);
  for (Eigen::Index s = 0; s < out.rows(); ++s) {
    for (Eigen::Index n = 0; n < out.cols(); ++n) {
      const auto seg = frame_ic.row(s).segment(n * k, k);
      out(s, n) = aggregate == NoteAggregate::kMean ? seg.mean() : seg.maxCoeff();
    }
  }
  return out;
}

SurprisalEval evaluate_surprisal(const ExperimentConfig& config, const MelodySplit& data,
                                 const flow::FlowModel& model) {
  const auto& grid = config.ic.t_grid;
  SurprisalEval out;
  out.frame_ic.resize(grid.size());
  out.curve.resize(grid.size());
  std::vector<double> oracle;
  for (const auto& notes : data.eval_notes) {
    const auto o = synth::oracle_ic(data.spec, notes);
    oracle.insert(oracle.end(), o.begin(), o.end());
  }
  parallel_for(grid.size(), config.threads, [&](std::size_t ti) {
    out.frame_ic[ti] = flow::sequence_ic(model, data.eval, config.ic_options(grid[ti]),
                                         splitmix64(config.seed * 1000003u + ti));
    const RowMatrix notes = note_ic(out.frame_ic[ti], config.melody.frames_per_note, config.ic.aggregate);
    std::vector<double> flat(notes.data(), notes.data() + notes.size());
    out.curve[ti] = {data.spec.construction, grid[ti], stats::spearman(flat, oracle)};
  });
  return out;
}

SurprisalResult run_surprisal(const ExperimentConfig& config) { return run_surprisal(config, {}); }

SurprisalResult run_surprisal(const ExperimentConfig& config,
                              std::map<synth::Construction, flow::FlowModel> models) {
  config.validate();
  SurprisalResult result;
  const auto hash = config_hash(config);
  CsvWriter curve({"config_hash", "seed", "run_id", "construction", "t_level", "rho", "p", "significant"});
  CsvWriter series({"config_hash", "seed", "run_id", "construction", "seq_id", "frame", "note", "pitch",
                    "t_level", "n_draws", "ic_nats", "ic_nats_per_dim", "oracle_ic_nats"});
  const auto& cons = config.melody.constructions;

  std::vector<MelodySplit> data(cons.size());
  for (std::size_t c = 0; c < cons.size(); ++c) data[c] = make_melody_data(config, cons[c]);

  std::vector<flow::FlowModel> trained(cons.size());
  parallel_for(cons.size(), config.threads, [&](std::size_t c) {
    if (auto it = models.find(cons[c]); it != models.end()) {
      trained[c] = it->second;
      return;
    }
    trained[c] = flow::FlowModel::create(config.flow_config(), config.seed);
    flow::train_flow(trained[c], data[c].train, config.seed);
  });

  const std::size_t fpn = config.melody.frames_per_note, d = config.melody.latent_dim;
  for (std::size_t c = 0; c < cons.size(); ++c) {
    const auto ev = evaluate_surprisal(config, data[c], trained[c]);
    for (std::size_t ti = 0; ti < ev.curve.size(); ++ti) {
      const auto& pt = ev.curve[ti];
      curve.field(hash).field(std::size_t(config.seed)).field(config.run_id);
      curve.field(synth::to_string(cons[c])).field(pt.t).field(pt.corr.rho).field(pt.corr.p);
      curve.field(pt.corr.significant).end_row();
      result.curve.push_back(pt);

      const RowMatrix& ic = ev.frame_ic[ti];
      const std::size_t n_draws = pt.t > 0.0 ? config.ic.n_draws : 1;
      for (std::size_t s = 0; s < data[c].eval_notes.size(); ++s) {
        const auto oracle = synth::oracle_ic(data[c].spec, data[c].eval_notes[s]);
        for (Eigen::Index f = 0; f < ic.cols(); ++f) {
          const std::size_t note = std::size_t(f) / fpn;
          const double v = ic(Eigen::Index(s), f);
          series.field(hash).field(std::size_t(config.seed)).field(config.run_id);
          series.field(synth::to_string(cons[c])).field(s).field(std::size_t(f)).field(note);
          series.field(data[c].eval_notes[s][note]).field(pt.t).field(n_draws).field(v);
          series.field(v / double(d)).field(oracle[note]).end_row();
        }
      }
    }
    result.models.emplace(cons[c], std::move(trained[c]));
  }
  result.curve_csv = curve.str();
  result.series_csv = series.str();
  return result;
}

}  // namespace pald::exp
