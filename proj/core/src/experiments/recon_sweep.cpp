// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/experiments/recon_sweep.hpp"

#include <algorithm>

#include "pald/error.hpp"
#include "pald/experiments/csv.hpp"
#include "pald/experiments/parallel.hpp"

namespace pald::exp {

ReconData make_recon_data(const ExperimentConfig& config) {
  const auto spec = config.signal_spec();
  ReconData d;
  d.features = synth::feature_map(spec);
  Rng train_rng = Rng::stream(config.seed, Stream::kData, 1);
  Rng eval_rng = Rng::stream(config.seed, Stream::kData, 2);
  d.train = synth::gen_hierarchical(spec, config.data.n_train, train_rng).x;
  d.eval = synth::gen_hierarchical(spec, config.data.n_eval, eval_rng).x;
  return d;
}

std::map<ae::NtMode, TrainedAutoencoder> train_autoencoders(const ExperimentConfig& config,
                                                            const ReconData& data) {
  const auto weights = config.weights();
  const auto& modes = config.sweep.modes;
  auto wants = [&](ae::NtMode m) { return std::find(modes.begin(), modes.end(), m) != modes.end(); };
  const bool need_none = wants(ae::NtMode::kNone) || wants(ae::NtMode::kD);

  std::vector<ae::NtMode> base;
  if (need_none) base.push_back(ae::NtMode::kNone);
  if (wants(ae::NtMode::kED)) base.push_back(ae::NtMode::kED);

  std::vector<TrainedAutoencoder> trained(base.size());
  parallel_for(base.size(), config.threads, [&](std::size_t i) {
    auto model = ae::AutoencoderModel::create(config.ae_config(base[i]), config.seed);
    auto log = ae::train_autoencoder(model, data.train, data.eval, weights, data.features, config.seed);
    trained[i] = {std::move(model), std::move(log)};
  });

  std::map<ae::NtMode, TrainedAutoencoder> out;
  for (std::size_t i = 0; i < base.size(); ++i) out.emplace(base[i], std::move(trained[i]));
  if (wants(ae::NtMode::kD)) {
    TrainedAutoencoder d;
    d.model = out.at(ae::NtMode::kNone).model;
    d.model.config.nt_mode = ae::NtMode::kD;
    d.model.config.steps = config.sweep.finetune_steps;
    d.model.opt = OptimizerState{};
    d.model.opt.lr = config.ae.lr;
    d.model.opt.weight_decay = config.ae.weight_decay;
    d.log = ae::train_autoencoder(d.model, data.train, data.eval, weights, data.features, config.seed + 1);
    out.emplace(ae::NtMode::kD, std::move(d));
  }
  if (!wants(ae::NtMode::kNone)) out.erase(ae::NtMode::kNone);
  return out;
}

std::string recon_csv(const ExperimentConfig& config,
                      const std::map<ae::NtMode, std::vector<ae::SweepRow>>& tables) {
  const auto weights = config.weights();
  const auto hash = config_hash(config);
  CsvWriter w({"config_hash", "seed", "run_id", "nt_mode", "snr", "t", "group", "weight", "group_error",
               "weighted_error", "si_sdr_db"});
  for (ae::NtMode mode : config.sweep.modes) {
    const auto it = tables.find(mode);
    if (it == tables.end()) continue;
    for (const auto& row : it->second) {
      for (std::size_t k = 0; k < row.group_error.size(); ++k) {
        w.field(hash).field(std::size_t(config.seed)).field(config.run_id).field(ae::to_string(mode));
        w.field(row.snr).field(row.t).field(k + 1).field(weights.w[k]).field(row.group_error[k]);
        w.field(row.weighted_error).field(row.si_sdr_db);
        w.end_row();
      }
    }
  }
  return w.str();
}

ReconSweepResult run_recon_sweep(const ExperimentConfig& config) {
  config.validate();
  const auto data = make_recon_data(config);
  const auto weights = config.weights();
  auto trained = train_autoencoders(config, data);
  ReconSweepResult result;
  for (auto& [mode, t] : trained) {
    result.tables[mode] = ae::reconstruction_sweep(t.model, data.eval, weights, data.features,
                                                   config.sweep.snr_levels, config.sweep.draws, config.seed);
    result.logs[mode] = t.log;
  }
  result.csv = recon_csv(config, result.tables);
  return result;
}

}  // namespace pald::exp
