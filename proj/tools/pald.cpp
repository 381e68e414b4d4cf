// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver for the experiment pipeline. Stages communicate only
// through files in the output directory.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "pald/error.hpp"
#include "pald/experiments/checkpoint.hpp"
#include "pald/experiments/config.hpp"
#include "pald/experiments/csv.hpp"
#include "pald/experiments/encoding.hpp"
#include "pald/experiments/recon_sweep.hpp"
#include "pald/experiments/surprisal.hpp"

namespace fs = std::filesystem;
using namespace pald;
using namespace pald::exp;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<std::size_t> threads;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

void write_manifest(const Options& o, const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::string>& outputs) {
  std::string m = "command = " + command + "\nconfig_hash = " + config_hash(cfg) +
                  "\nseed = " + std::to_string(cfg.seed) + "\n";
  for (const auto& f : outputs) m += "output = " + f + "\n";
  m += "\n# config\n" + to_text(cfg);
  atomic_write(fs::path(o.out) / ("manifest_" + command + ".txt"), m);
}

std::string ckpt_meta(const ExperimentConfig& cfg, const std::string& what) {
  return "model = " + what + "\nconfig_hash = " + config_hash(cfg) + "\n" + to_text(cfg);
}

fs::path ae_path(const Options& o, ae::NtMode m) {
  return fs::path(o.out) / (std::string("ae_") + ae::to_string(m) + ".ckpt");
}

fs::path flow_path(const Options& o, synth::Construction c) {
  return fs::path(o.out) / (std::string("flow_") + synth::to_string(c) + ".ckpt");
}

int cmd_gen_data(const Options& o) {
  const auto cfg = load(o);
  const auto data = make_recon_data(cfg);
  CsvWriter sig({"config_hash", "seed", "split", "row", "col", "value"});
  const auto hash = config_hash(cfg);
  for (Eigen::Index r = 0; r < data.eval.rows(); ++r)
    for (Eigen::Index c = 0; c < data.eval.cols(); ++c)
      sig.field(hash).field(std::size_t(cfg.seed)).field("eval").field(std::size_t(r)).field(std::size_t(c))
          .field(data.eval(r, c)).end_row();
  CsvWriter mel({"config_hash", "seed", "seq_id", "note", "pitch", "oracle_ic_nats"});
  const auto split = make_melody_data(cfg, cfg.melody.constructions.front());
  for (std::size_t s = 0; s < split.eval_notes.size(); ++s) {
    const auto ic = synth::oracle_ic(split.spec, split.eval_notes[s]);
    for (std::size_t n = 0; n < ic.size(); ++n)
      mel.field(hash).field(std::size_t(cfg.seed)).field(s).field(n).field(split.eval_notes[s][n]).field(ic[n])
          .end_row();
  }
  atomic_write(fs::path(o.out) / "signals_eval.csv", sig.str());
  atomic_write(fs::path(o.out) / "melodies_eval.csv", mel.str());
  write_manifest(o, cfg, "gen-data", {"signals_eval.csv", "melodies_eval.csv"});
  return 0;
}

int cmd_train_ae(const Options& o) {
  const auto cfg = load(o);
  const auto data = make_recon_data(cfg);
  const auto trained = train_autoencoders(cfg, data);
  std::vector<std::string> outs;
  CsvWriter log({"config_hash", "seed", "nt_mode", "step", "loss"});
  for (const auto& [mode, t] : trained) {
    save_checkpoint({t.model.params, ckpt_meta(cfg, std::string("autoencoder ") + ae::to_string(mode))},
                    ae_path(o, mode));
    outs.push_back(ae_path(o, mode).filename().string());
    for (std::size_t s = 0; s < t.log.step_loss.size(); ++s)
      log.field(config_hash(cfg)).field(std::size_t(cfg.seed)).field(ae::to_string(mode)).field(s + 1)
          .field(t.log.step_loss[s]).end_row();
  }
  atomic_write(fs::path(o.out) / "ae_training.csv", log.str());
  outs.push_back("ae_training.csv");
  write_manifest(o, cfg, "train-ae", outs);
  return 0;
}

int cmd_sweep(const Options& o) {
  const auto cfg = load(o);
  const auto data = make_recon_data(cfg);
  std::map<ae::NtMode, std::vector<ae::SweepRow>> tables;
  for (ae::NtMode mode : cfg.sweep.modes) {
    auto model = ae::AutoencoderModel::create(cfg.ae_config(mode), cfg.seed);
    const auto path = ae_path(o, mode);
    if (!fs::exists(path)) throw ConfigError("missing " + path.string() + "; run train-ae first");
    restore_params(model.params, load_checkpoint(path).params);
    tables[mode] = ae::reconstruction_sweep(model, data.eval, cfg.weights(), data.features,
                                            cfg.sweep.snr_levels, cfg.sweep.draws, cfg.seed);
  }
  atomic_write(fs::path(o.out) / "recon_sweep.csv", recon_csv(cfg, tables));
  write_manifest(o, cfg, "sweep", {"recon_sweep.csv"});
  return 0;
}

int cmd_train_flow(const Options& o) {
  const auto cfg = load(o);
  std::vector<std::string> outs;
  for (auto c : cfg.melody.constructions) {
    const auto data = make_melody_data(cfg, c);
    auto model = flow::FlowModel::create(cfg.flow_config(), cfg.seed);
    flow::train_flow(model, data.train, cfg.seed);
    save_checkpoint({model.params, ckpt_meta(cfg, std::string("flow ") + synth::to_string(c))}, flow_path(o, c));
    outs.push_back(flow_path(o, c).filename().string());
  }
  write_manifest(o, cfg, "train-flow", outs);
  return 0;
}

int cmd_ic(const Options& o) {
  const auto cfg = load(o);
  std::map<synth::Construction, flow::FlowModel> models;
  for (auto c : cfg.melody.constructions) {
    auto model = flow::FlowModel::create(cfg.flow_config(), cfg.seed);
    const auto path = flow_path(o, c);
    if (!fs::exists(path)) throw ConfigError("missing " + path.string() + "; run train-flow first");
    restore_params(model.params, load_checkpoint(path).params);
    models.emplace(c, std::move(model));
  }
  const auto res = run_surprisal(cfg, std::move(models));
  atomic_write(fs::path(o.out) / "surprisal_curve.csv", res.curve_csv);
  atomic_write(fs::path(o.out) / "surprisal_series.csv", res.series_csv);
  write_manifest(o, cfg, "ic", {"surprisal_curve.csv", "surprisal_series.csv"});
  return 0;
}

int cmd_encode(const Options& o) {
  const auto cfg = load(o);
  const auto series = read_csv(fs::path(o.out) / "surprisal_series.csv");
  const auto res = run_encoding(cfg, series);
  atomic_write(fs::path(o.out) / "encoding_summary.csv", res.summary_csv);
  atomic_write(fs::path(o.out) / "encoding_topography.csv", res.topography_csv);
  atomic_write(fs::path(o.out) / "trf_results.csv", res.results_csv);
  write_manifest(o, cfg, "encode", {"encoding_summary.csv", "encoding_topography.csv", "trf_results.csv"});
  return 0;
}

int cmd_report(const Options& o) {
  const auto cfg = load(o);
  std::string rep = "config_hash = " + config_hash(cfg) + "\nseed = " + std::to_string(cfg.seed) + "\n";
  auto section = [&](const char* file, const std::vector<std::string>& cols) {
    const auto path = fs::path(o.out) / file;
    if (!fs::exists(path)) {
      rep += "\n[" + std::string(file) + "] missing\n";
      return;
    }
    const auto t = read_csv(path);
    rep += "\n[" + std::string(file) + "] " + std::to_string(t.rows.size()) + " rows\n";
    std::vector<std::size_t> idx;
    for (const auto& c : cols) idx.push_back(t.column(c));
    for (const auto& c : cols) rep += c + "\t";
    rep += "\n";
    for (const auto& row : t.rows) {
      for (auto i : idx) rep += row[i] + "\t";
      rep += "\n";
    }
  };
  section("surprisal_curve.csv", {"construction", "t_level", "rho", "p", "significant"});
  section("encoding_summary.csv", {"construction", "t_level", "mean_delta_r_coupled", "mean_delta_r_uncoupled",
                                   "significant_coupled", "significant_uncoupled"});
  const auto sweep = fs::path(o.out) / "recon_sweep.csv";
  if (fs::exists(sweep)) {
    const auto t = read_csv(sweep);
    const auto m = t.column("nt_mode"), s = t.column("snr"), g = t.column("group"),
               w = t.column("weighted_error"), q = t.column("si_sdr_db");
    rep += "\n[recon_sweep.csv]\nnt_mode\tsnr\tweighted_error\tsi_sdr_db\n";
    for (const auto& row : t.rows)
      if (row[g] == "1") rep += row[m] + "\t" + row[s] + "\t" + row[w] + "\t" + row[q] + "\n";
  }
  atomic_write(fs::path(o.out) / "report.txt", rep);
  std::cout << rep;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pald: noised-latent autoencoders, latent flows and surprisal encoding"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "config file (section.key = value)");
    sub->add_option("--seed", seed, "override run.seed")->each([&](const std::string&) { o.seed = seed; });
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", threads, "worker threads")->each([&](const std::string&) { o.threads = threads; });
  };
  struct Cmd {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Cmd cmds[] = {
      {"gen-data", "write evaluation signals and melodies", cmd_gen_data},
      {"train-ae", "train autoencoders for every configured NT mode", cmd_train_ae},
      {"sweep", "reconstruction error and SI-SDR across SNR levels", cmd_sweep},
      {"train-flow", "train latent flow models per construction", cmd_train_flow},
      {"ic", "information content and correlation against the oracle", cmd_ic},
      {"encode", "synthetic EEG encoding analysis from the IC series", cmd_encode},
      {"report", "summarise the CSVs in the output directory", cmd_report},
  };
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, &c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    for (const auto& [sub, cmd] : subs)
      if (sub->parsed()) return cmd->fn(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
