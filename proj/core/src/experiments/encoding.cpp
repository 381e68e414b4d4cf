// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/experiments/encoding.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <tuple>

#include "pald/error.hpp"
#include "pald/experiments/parallel.hpp"

namespace pald::exp {

namespace {

double to_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("bad number '" + s + "' in series");
  return v;
}

long to_long(const std::string& s) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("bad integer '" + s + "' in series");
  return v;
}

struct Song {
  std::vector<int> pitches;
  std::vector<double> oracle;
  std::vector<std::vector<double>> frame_ic;  // per note
};

using CellKey = std::pair<std::string, double>;  // construction, t

struct Series {
  std::map<CellKey, std::map<long, Song>> cells;
};

Series parse_series(const CsvTable& table) {
  const auto c_con = table.column("construction"), c_seq = table.column("seq_id"),
             c_note = table.column("note"), c_pitch = table.column("pitch"), c_t = table.column("t_level"),
             c_ic = table.column("ic_nats"), c_or = table.column("oracle_ic_nats");
  Series out;
  for (const auto& row : table.rows) {
    Song& song = out.cells[{row[c_con], to_double(row[c_t])}][to_long(row[c_seq])];
    const auto note = std::size_t(to_long(row[c_note]));
    if (note > song.pitches.size()) throw FormatError("series notes are not contiguous");
    if (note == song.pitches.size()) {
      song.pitches.push_back(int(to_long(row[c_pitch])));
      song.oracle.push_back(to_double(row[c_or]));
      song.frame_ic.emplace_back();
    }
    song.frame_ic[note].push_back(to_double(row[c_ic]));
  }
  if (out.cells.empty()) throw FormatError("surprisal series is empty");
  return out;
}

double aggregate(const std::vector<double>& xs, NoteAggregate a) {
  if (a == NoteAggregate::kMax) return *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double v : xs) s += v;
  return s / double(xs.size());
}

}  // namespace

EncodingRunResult run_encoding(const ExperimentConfig& config, const CsvTable& table) {
  config.validate();
  const Series series = parse_series(table);
  const auto& first = series.cells.begin()->second;
  const std::size_t n_trials = first.size();
  for (const auto& [key, songs] : series.cells) {
    if (songs.size() != n_trials) throw FormatError("series cells have different trial counts");
  }

  // Stimuli and ground-truth EEG depend only on the melodies.
  const std::size_t os = config.eeg.stimulus.audio_oversample;
  std::vector<synth::Stimulus> stimuli;
  std::vector<std::vector<double>> envelope;
  std::vector<synth::TrialPredictors> truth;
  {
    std::size_t trial = 0;
    for (const auto& [seq, song] : first) {
      Rng stim_rng = Rng::stream(config.seed, Stream::kData, 100 + trial);
      stimuli.push_back(synth::gen_stimulus(song.pitches, config.eeg.stimulus, stim_rng));
      const auto& st = stimuli.back();
      envelope.push_back(trf::block_average(trf::hilbert_envelope(st.waveform), os));
      if (envelope.back().size() != st.voiced.size())
        throw std::invalid_argument("encoding: envelope and predictor rates disagree");
      Rng fill_rng = Rng::stream(config.seed, Stream::kProbes, trial);
      truth.push_back({trf::fill_unvoiced(synth::note_ic_series(st, song.oracle), st.voiced, fill_rng),
                       envelope.back()});
      ++trial;
    }
  }
  synth::SyntheticEEGSpec eeg_spec = config.eeg.spec;
  eeg_spec.n_trials = n_trials;
  eeg_spec.lag_min_ms = config.trf.window.min_ms;
  eeg_spec.lag_max_ms = config.trf.window.max_ms;
  Rng kernel_rng = Rng::stream(config.seed, Stream::kData, 200);
  const auto kernels = synth::gen_kernels(eeg_spec, kernel_rng);
  Rng eeg_rng = Rng::stream(config.seed, Stream::kData, 201);
  const auto eeg = synth::gen_synthetic_eeg(eeg_spec, truth, kernels, eeg_rng);

  std::vector<CellKey> keys;
  for (const auto& [key, songs] : series.cells) keys.push_back(key);
  std::vector<trf::EncodingResult> results(keys.size());
  trf::EncodingOptions opts = config.trf;
  opts.sample_rate = config.eeg.spec.sample_rate;

  parallel_for(keys.size(), config.threads, [&](std::size_t k) {
    const auto& songs = series.cells.at(keys[k]);
    std::vector<std::vector<double>> ic;
    std::size_t trial = 0;
    for (const auto& [seq, song] : songs) {
      std::vector<double> note_ic;
      for (const auto& frames : song.frame_ic) note_ic.push_back(aggregate(frames, config.ic.aggregate));
      const auto& st = stimuli[trial];
      Rng fill_rng = Rng::stream(config.seed, Stream::kProbes, 1000 + trial);
      ic.push_back(trf::fill_unvoiced(synth::note_ic_series(st, note_ic), st.voiced, fill_rng));
      ++trial;
    }
    results[k] = trf::delta_r_pipeline(ic, envelope, eeg, opts);
  });

  const auto hash = config_hash(config);
  CsvWriter summary({"config_hash", "seed", "run_id", "construction", "t_level", "mean_delta_r_coupled",
                     "mean_delta_r_uncoupled", "significant_coupled", "significant_uncoupled"});
  CsvWriter topo({"config_hash", "seed", "run_id", "construction", "t_level", "channel", "coupled",
                  "mean_delta_r", "p", "test", "significant"});
  CsvWriter detail({"config_hash", "seed", "run_id", "construction", "t_level", "participant", "channel",
                    "trial", "r_full", "r_reduced", "delta_r", "lambda_full", "lambda_reduced", "significant"});
  EncodingRunResult out;
  const std::size_t n_coupled = config.eeg.spec.n_coupled;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const auto& [con, t] = keys[k];
    const auto& res = results[k];
    EncodingSummary s{con, t};
    std::size_t nc = 0, nu = 0;
    for (std::size_t ch = 0; ch < res.channels.size(); ++ch) {
      const auto& c = res.channels[ch];
      const bool coupled = ch < n_coupled;
      (coupled ? s.mean_delta_coupled : s.mean_delta_uncoupled) += c.mean_delta;
      (coupled ? nc : nu) += 1;
      if (c.significant) (coupled ? s.significant_coupled : s.significant_uncoupled) += 1;
      topo.field(hash).field(std::size_t(config.seed)).field(config.run_id).field(con).field(t);
      topo.field(ch).field(coupled).field(c.mean_delta).field(c.p).field(c.test).field(c.significant);
      topo.end_row();
    }
    if (nc) s.mean_delta_coupled /= double(nc);
    if (nu) s.mean_delta_uncoupled /= double(nu);
    summary.field(hash).field(std::size_t(config.seed)).field(config.run_id).field(con).field(t);
    summary.field(s.mean_delta_coupled).field(s.mean_delta_uncoupled);
    summary.field(s.significant_coupled).field(s.significant_uncoupled).end_row();
    out.summary.push_back(s);

    for (std::size_t p = 0; p < res.participants.size(); ++p) {
      const auto& pr = res.participants[p];
      for (Eigen::Index ch = 0; ch < pr.full.r.cols(); ++ch) {
        for (Eigen::Index tr = 0; tr < pr.full.r.rows(); ++tr) {
          detail.field(hash).field(std::size_t(config.seed)).field(config.run_id).field(con).field(t);
          detail.field(p).field(std::size_t(ch)).field(std::size_t(tr));
          detail.field(pr.full.r(tr, ch)).field(pr.reduced.r(tr, ch));
          detail.field(pr.full.r(tr, ch) - pr.reduced.r(tr, ch));
          detail.field(pr.full.lambda(tr, ch)).field(pr.reduced.lambda(tr, ch));
          detail.field(pr.channels[std::size_t(ch)].significant).end_row();
        }
      }
    }
  }
  out.summary_csv = summary.str();
  out.topography_csv = topo.str();
  out.results_csv = detail.str();
  return out;
}

}  // namespace pald::exp
