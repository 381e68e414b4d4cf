// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/experiments/config.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "pald/error.hpp"

namespace pald::exp {

const char* to_string(Kind k) {
  switch (k) {
    case Kind::kReconSweep: return "recon_sweep";
    case Kind::kSurprisal: return "surprisal";
    case Kind::kEncoding: return "encoding";
  }
  return "?";
}

namespace {

// --- value codecs ----------------------------------------------------------

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& v) {
  if (v == "inf") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || std::isnan(out))
    throw ConfigError("not a number: '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("not a non-negative integer: '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("not a boolean (true/false): '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty list element in '" + v + "'");
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + std::string(f(xs[i]));
  return out;
}

// Wraps an enum-from-string that throws std::invalid_argument.
template <class F>
auto as_config_error(F f, const std::string& v) {
  try {
    return f(v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// --- field table -------------------------------------------------------------

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

using Table = std::vector<std::pair<std::string, Field>>;

template <class M>
Field f_double(M member) {
  return {[member](ExperimentConfig& c, const std::string& v) { member(c) = parse_double(v); },
          [member](const ExperimentConfig& c) { return fmt_double(member(const_cast<ExperimentConfig&>(c))); }};
}

template <class M>
Field f_size(M member) {
  return {[member](ExperimentConfig& c, const std::string& v) { member(c) = parse_u64(v); },
          [member](const ExperimentConfig& c) {
            return std::to_string(member(const_cast<ExperimentConfig&>(c)));
          }};
}

template <class M>
Field f_bool(M member) {
  return {[member](ExperimentConfig& c, const std::string& v) { member(c) = parse_bool(v); },
          [member](const ExperimentConfig& c) {
            return std::string(member(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          }};
}

template <class M>
Field f_doubles(M member) {
  return {[member](ExperimentConfig& c, const std::string& v) {
            std::vector<double> xs;
            for (const auto& s : split_list(v)) xs.push_back(parse_double(s));
            member(c) = xs;
          },
          [member](const ExperimentConfig& c) {
            return join(member(const_cast<ExperimentConfig&>(c)), fmt_double);
          }};
}

#define MEMBER(expr) [](ExperimentConfig& c) -> auto& { return expr; }

const Table& table() {
  static const Table t = [] {
    Table t;
    auto add = [&](const char* key, Field f) { t.emplace_back(key, std::move(f)); };
    add("run.kind",
        {[](ExperimentConfig& c, const std::string& v) {
           if (v == "recon_sweep") c.kind = Kind::kReconSweep;
           else if (v == "surprisal") c.kind = Kind::kSurprisal;
           else if (v == "encoding") c.kind = Kind::kEncoding;
           else throw ConfigError("unknown run.kind '" + v + "'");
         },
         [](const ExperimentConfig& c) { return std::string(to_string(c.kind)); }});
    add("run.seed", f_size(MEMBER(c.seed)));
    add("run.id", {[](ExperimentConfig& c, const std::string& v) {
                     if (v.empty() || v.find_first_of(",\"\n") != std::string::npos)
                       throw ConfigError("run.id must be non-empty without commas or quotes");
                     c.run_id = v;
                   },
                   [](const ExperimentConfig& c) { return c.run_id; }});
    add("run.threads", f_size(MEMBER(c.threads)));

    add("data.groups", f_size(MEMBER(c.data.groups)));
    add("data.group_dim", f_size(MEMBER(c.data.group_dim)));
    add("data.coeff_rank", f_size(MEMBER(c.data.coeff_rank)));
    add("data.coeff_decay", f_double(MEMBER(c.data.coeff_decay)));
    add("data.weight_alpha", f_double(MEMBER(c.data.weight_alpha)));
    add("data.n_train", f_size(MEMBER(c.data.n_train)));
    add("data.n_eval", f_size(MEMBER(c.data.n_eval)));

    add("ae.latent_dim", f_size(MEMBER(c.ae.latent_dim)));
    add("ae.hidden", f_size(MEMBER(c.ae.hidden)));
    add("ae.hidden_layers", f_size(MEMBER(c.ae.hidden_layers)));
    add("ae.bottleneck",
        {[](ExperimentConfig& c, const std::string& v) {
           c.ae.bottleneck = as_config_error(ae::bottleneck_from_string, v);
         },
         [](const ExperimentConfig& c) { return std::string(ae::to_string(c.ae.bottleneck)); }});
    add("ae.nt_mode",
        {[](ExperimentConfig& c, const std::string& v) {
           c.ae.nt_mode = as_config_error(ae::nt_mode_from_string, v);
         },
         [](const ExperimentConfig& c) { return std::string(ae::to_string(c.ae.nt_mode)); }});
    add("ae.lr", f_double(MEMBER(c.ae.lr)));
    add("ae.weight_decay", f_double(MEMBER(c.ae.weight_decay)));
    add("ae.warmup", f_size(MEMBER(c.ae.warmup)));
    add("ae.steps", f_size(MEMBER(c.ae.steps)));
    add("ae.batch", f_size(MEMBER(c.ae.batch)));
    add("ae.grad_clip", f_double(MEMBER(c.ae.grad_clip)));

    add("noise.m", f_double(MEMBER(c.ae.schedule.m)));
    add("noise.s", f_double(MEMBER(c.ae.schedule.s)));
    add("noise.gamma", f_double(MEMBER(c.ae.schedule.gamma)));

    add("sweep.snr_levels", f_doubles(MEMBER(c.sweep.snr_levels)));
    add("sweep.draws", f_size(MEMBER(c.sweep.draws)));
    add("sweep.modes",
        {[](ExperimentConfig& c, const std::string& v) {
           c.sweep.modes.clear();
           for (const auto& s : split_list(v)) c.sweep.modes.push_back(as_config_error(ae::nt_mode_from_string, s));
         },
         [](const ExperimentConfig& c) { return join(c.sweep.modes, [](ae::NtMode m) { return ae::to_string(m); }); }});
    add("sweep.finetune_steps", f_size(MEMBER(c.sweep.finetune_steps)));

    add("melody.n_pitches", f_size(MEMBER(c.melody.n_pitches)));
    add("melody.notes", f_size(MEMBER(c.melody.notes)));
    add("melody.frames_per_note", f_size(MEMBER(c.melody.frames_per_note)));
    add("melody.latent_dim", f_size(MEMBER(c.melody.latent_dim)));
    add("melody.pitch_dim", f_size(MEMBER(c.melody.pitch_dim)));
    add("melody.pitch_power", f_double(MEMBER(c.melody.pitch_power)));
    add("melody.nuisance_power", f_double(MEMBER(c.melody.nuisance_power)));
    add("melody.dirichlet_alpha", f_double(MEMBER(c.melody.dirichlet_alpha)));
    add("melody.rotation_seed", f_size(MEMBER(c.melody.rotation_seed)));
    add("melody.normalize", f_bool(MEMBER(c.melody.normalize)));
    add("melody.n_train", f_size(MEMBER(c.melody.n_train)));
    add("melody.n_eval", f_size(MEMBER(c.melody.n_eval)));
    add("melody.constructions",
        {[](ExperimentConfig& c, const std::string& v) {
           c.melody.constructions.clear();
           for (const auto& s : split_list(v))
             c.melody.constructions.push_back(as_config_error(synth::construction_from_string, s));
         },
         [](const ExperimentConfig& c) {
           return join(c.melody.constructions, [](synth::Construction x) { return synth::to_string(x); });
         }});

    add("flow.context_hidden", f_size(MEMBER(c.flow.context_hidden)));
    add("flow.velocity_hidden", f_size(MEMBER(c.flow.velocity_hidden)));
    add("flow.velocity_layers", f_size(MEMBER(c.flow.velocity_layers)));
    add("flow.time_features", f_size(MEMBER(c.flow.time_features)));
    add("flow.m", f_double(MEMBER(c.flow.t_mean)));
    add("flow.s", f_double(MEMBER(c.flow.t_std)));
    add("flow.lr", f_double(MEMBER(c.flow.lr)));
    add("flow.weight_decay", f_double(MEMBER(c.flow.weight_decay)));
    add("flow.warmup", f_size(MEMBER(c.flow.warmup)));
    add("flow.steps", f_size(MEMBER(c.flow.steps)));
    add("flow.batch", f_size(MEMBER(c.flow.batch)));
    add("flow.draws_per_frame", f_size(MEMBER(c.flow.draws_per_frame)));
    add("flow.max_seq_len", f_size(MEMBER(c.flow.max_seq_len)));
    add("flow.grad_clip", f_double(MEMBER(c.flow.grad_clip)));
    add("flow.output_gain", f_double(MEMBER(c.flow.output_gain)));

    add("ic.t_grid", f_doubles(MEMBER(c.ic.t_grid)));
    add("ic.n_draws", f_size(MEMBER(c.ic.n_draws)));
    add("ic.ode_steps", f_size(MEMBER(c.ic.ode_steps)));
    add("ic.divergence",
        {[](ExperimentConfig& c, const std::string& v) {
           if (v == "exact") c.ic.divergence = flow::DivergenceMode::kExact;
           else if (v == "hutchinson") c.ic.divergence = flow::DivergenceMode::kHutchinson;
           else throw ConfigError("unknown ic.divergence '" + v + "'");
         },
         [](const ExperimentConfig& c) {
           return std::string(c.ic.divergence == flow::DivergenceMode::kExact ? "exact" : "hutchinson");
         }});
    add("ic.probes", f_size(MEMBER(c.ic.probes)));
    add("ic.aggregate",
        {[](ExperimentConfig& c, const std::string& v) {
           if (v == "mean") c.ic.aggregate = NoteAggregate::kMean;
           else if (v == "max") c.ic.aggregate = NoteAggregate::kMax;
           else throw ConfigError("unknown ic.aggregate '" + v + "'");
         },
         [](const ExperimentConfig& c) {
           return std::string(c.ic.aggregate == NoteAggregate::kMean ? "mean" : "max");
         }});

    add("eeg.n_channels", f_size(MEMBER(c.eeg.spec.n_channels)));
    add("eeg.n_coupled", f_size(MEMBER(c.eeg.spec.n_coupled)));
    add("eeg.n_participants", f_size(MEMBER(c.eeg.spec.n_participants)));
    add("eeg.sample_rate", f_double(MEMBER(c.eeg.spec.sample_rate)));
    add("eeg.noise_power", f_double(MEMBER(c.eeg.spec.noise_power)));
    add("eeg.ic_gain", f_double(MEMBER(c.eeg.spec.ic_gain)));
    add("eeg.env_gain", f_double(MEMBER(c.eeg.spec.env_gain)));
    add("eeg.kernel_peak_ms", f_double(MEMBER(c.eeg.spec.kernel_peak_ms)));
    add("eeg.note_ms", f_double(MEMBER(c.eeg.stimulus.note_ms)));
    add("eeg.rest_prob", f_double(MEMBER(c.eeg.stimulus.rest_prob)));
    add("eeg.rest_ms", f_double(MEMBER(c.eeg.stimulus.rest_ms)));
    add("eeg.audio_oversample", f_size(MEMBER(c.eeg.stimulus.audio_oversample)));

    add("trf.lag_min_ms", f_double(MEMBER(c.trf.window.min_ms)));
    add("trf.lag_max_ms", f_double(MEMBER(c.trf.window.max_ms)));
    add("trf.margin_ms", f_double(MEMBER(c.trf.window.margin_ms)));
    add("trf.lambda_grid", f_doubles(MEMBER(c.trf.cv.lambda_grid)));
    add("trf.inner_folds", f_size(MEMBER(c.trf.cv.inner_folds)));
    add("trf.fdr_q", f_double(MEMBER(c.trf.fdr_q)));
    return t;
  }();
  return t;
}

#undef MEMBER

}  // namespace

ExperimentConfig::ExperimentConfig() {
  sweep.snr_levels = noise::table_snr_levels();
  ic.t_grid = noise::ic_t_grid();
  ae.input_dim = data.groups * data.group_dim;
}

void ExperimentConfig::validate() const {
  try {
    if (threads == 0) throw ConfigError("run.threads must be positive");
    signal_spec().validate();
    ae_config(ae.nt_mode).validate();
    if (sweep.snr_levels.empty()) throw ConfigError("sweep.snr_levels is empty");
    for (double s : sweep.snr_levels)
      if (!(s >= 0.0)) throw ConfigError("sweep.snr_levels must be non-negative");
    if (sweep.draws == 0) throw ConfigError("sweep.draws must be positive");
    if (sweep.modes.empty()) throw ConfigError("sweep.modes is empty");
    if (data.n_train == 0 || data.n_eval == 0) throw ConfigError("data sizes must be positive");
    if (melody.notes == 0 || melody.frames_per_note == 0) throw ConfigError("melody length must be positive");
    if (melody.n_train == 0 || melody.n_eval == 0) throw ConfigError("melody sizes must be positive");
    if (melody.constructions.empty()) throw ConfigError("melody.constructions is empty");
    for (auto c : melody.constructions) melody_spec(c).validate();
    flow_config().validate();
    if (ic.t_grid.empty()) throw ConfigError("ic.t_grid is empty");
    for (double t : ic.t_grid)
      if (!(t >= 0.0 && t < 1.0)) throw ConfigError("ic.t_grid values must be in [0, 1)");
    if (ic.n_draws == 0 || ic.ode_steps == 0 || ic.probes == 0)
      throw ConfigError("ic.n_draws, ic.ode_steps and ic.probes must be positive");
    auto eeg_spec = eeg.spec;
    eeg_spec.lag_min_ms = trf.window.min_ms;
    eeg_spec.lag_max_ms = trf.window.max_ms;
    eeg_spec.validate();
    trf.window.validate();
    if (trf.cv.lambda_grid.empty()) throw ConfigError("trf.lambda_grid is empty");
    for (double l : trf.cv.lambda_grid)
      if (!(l >= 0.0) || std::isinf(l)) throw ConfigError("trf.lambda_grid values must be finite and >= 0");
    if (!(trf.fdr_q > 0.0 && trf.fdr_q < 1.0)) throw ConfigError("trf.fdr_q must be in (0, 1)");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

synth::HierarchicalSignalSpec ExperimentConfig::signal_spec() const {
  synth::HierarchicalSignalSpec s;
  s.groups = data.groups;
  s.group_dim = data.group_dim;
  s.coeff_rank = data.coeff_rank;
  s.weights = weights();
  s.coeff_std.resize(data.groups);
  for (std::size_t k = 0; k < data.groups; ++k) s.coeff_std[k] = std::pow(double(k + 1), -data.coeff_decay);
  s.seed = seed;
  return s;
}

ae::PerceptualWeights ExperimentConfig::weights() const {
  try {
    return ae::PerceptualWeights::power_law(data.groups, data.weight_alpha);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

synth::MarkovMelodySpec ExperimentConfig::melody_spec(synth::Construction c) const {
  synth::MarkovMelodySpec s;
  s.n_pitches = melody.n_pitches;
  s.seq_len = melody.notes * melody.frames_per_note;
  s.latent_dim = melody.latent_dim;
  s.pitch_dim = melody.pitch_dim;
  s.construction = c;
  s.pitch_power = melody.pitch_power;
  s.nuisance_power = melody.nuisance_power;
  s.rotation_seed = melody.rotation_seed;
  s.normalize = melody.normalize;
  if (s.n_pitches >= 2 && melody.dirichlet_alpha > 0.0) {
    Rng rng = Rng::stream(seed, Stream::kData, 0x7A);
    s.transition = synth::sparse_dirichlet_transition(s.n_pitches, melody.dirichlet_alpha, rng);
  }
  return s;
}

ae::AutoencoderConfig ExperimentConfig::ae_config(ae::NtMode mode) const {
  ae::AutoencoderConfig c = this->ae;
  c.input_dim = data.groups * data.group_dim;
  c.nt_mode = mode;
  return c;
}

flow::FlowConfig ExperimentConfig::flow_config() const {
  flow::FlowConfig c = flow;
  c.latent_dim = melody.latent_dim;
  return c;
}

flow::IcOptions ExperimentConfig::ic_options(double t) const {
  flow::IcOptions o;
  o.t_level = t;
  o.n_draws = ic.n_draws;
  o.ode_steps = ic.ode_steps;
  o.divergence = {ic.divergence, ic.probes};
  return o;
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, const Field*> index;
  for (const auto& [k, f] : table()) index.emplace(k, &f);

  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'section.key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second)
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    try {
      it->second->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + " (" + key + "): " + e.what());
    }
  }
  cfg.ae.input_dim = cfg.data.groups * cfg.data.group_dim;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [k, f] : table()) out += k + " = " + f.get(config) + "\n";
  return out;
}

std::string sha1_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("sha1: digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 15];
  }
  return hex;
}

std::string blob_hash(std::string_view data) {
  std::string framed = "blob " + std::to_string(data.size());
  framed.push_back('\0');
  framed.append(data);
  return sha1_hex(framed);
}

std::string config_hash(const ExperimentConfig& config) {
  // The worker count never changes results, so it stays out of the identity.
  ExperimentConfig c = config;
  c.threads = 1;
  return sha1_hex(to_text(c)).substr(0, 16);
}

}  // namespace pald::exp
