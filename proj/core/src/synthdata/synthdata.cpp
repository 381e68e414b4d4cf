// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/synthdata/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "pald/metrics/fft.hpp"

namespace pald::synth {

// --- hierarchical -----------------------------------------------------------

void HierarchicalSignalSpec::validate() const {
  if (groups == 0 || group_dim == 0) throw std::invalid_argument("hierarchical: empty shape");
  if (weights.groups() != groups) throw std::invalid_argument("hierarchical: weight count != groups");
  weights.validate();
  if (coeff_std.size() != groups) throw std::invalid_argument("hierarchical: coeff_std count != groups");
  for (double s : coeff_std)
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("hierarchical: bad coeff_std");
  if (coeff_rank == 0 || coeff_rank > group_dim)
    throw std::invalid_argument("hierarchical: coeff_rank must be in [1, group_dim]");
}

metrics::FeatureMap feature_map(const HierarchicalSignalSpec& spec) {
  spec.validate();
  Rng rng = Rng::stream(spec.seed, Stream::kInit, 0xF00D);
  return metrics::FeatureMap::random(spec.groups, spec.group_dim, rng);
}

HierarchicalBatch gen_hierarchical(const HierarchicalSignalSpec& spec, std::size_t n, Rng& rng) {
  const auto fm = feature_map(spec);
  HierarchicalBatch out;
  out.coeffs = RowMatrix::Zero(Eigen::Index(n), Eigen::Index(spec.dim()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < spec.groups; ++k) {
      for (std::size_t j = 0; j < spec.coeff_rank; ++j) {
        out.coeffs(Eigen::Index(i), Eigen::Index(k * spec.group_dim + j)) =
            spec.coeff_std[k] * rng.normal();
      }
    }
  }
  out.x = out.coeffs * fm.basis.matrix().transpose();
  return out;
}

// --- melodies ---------------------------------------------------------------

const char* to_string(Construction c) {
  return c == Construction::kAligned ? "aligned" : "unaligned";
}

Construction construction_from_string(const std::string& s) {
  if (s == "aligned") return Construction::kAligned;
  if (s == "unaligned") return Construction::kUnaligned;
  throw std::invalid_argument("unknown construction '" + s + "'");
}

void MarkovMelodySpec::validate() const {
  if (n_pitches < 2) throw std::invalid_argument("melody: need at least two pitches");
  if (pitch_dim == 0 || pitch_dim > latent_dim)
    throw std::invalid_argument("melody: pitch_dim must be in [1, latent_dim]");
  if (n_pitches > 2 * pitch_dim) throw std::invalid_argument("melody: n_pitches exceeds 2*pitch_dim");
  if (seq_len == 0) throw std::invalid_argument("melody: seq_len must be positive");
  if (!(pitch_power > 0.0)) throw std::invalid_argument("melody: pitch_power must be positive");
  if (!(nuisance_power >= 0.0)) throw std::invalid_argument("melody: nuisance_power must be >= 0");
  if (construction == Construction::kUnaligned && latent_dim > pitch_dim && !(nuisance_power > 0.0))
    throw std::invalid_argument("melody: unaligned construction needs nuisance_power > 0");
  if (std::size_t(transition.rows()) != n_pitches || std::size_t(transition.cols()) != n_pitches)
    throw std::invalid_argument("melody: transition shape mismatch");
  for (Eigen::Index r = 0; r < transition.rows(); ++r) {
    if ((transition.row(r).array() < 0.0).any())
      throw std::invalid_argument("melody: negative transition probability");
    if (std::abs(transition.row(r).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("melody: transition rows must sum to one");
  }
}

RowMatrix sparse_dirichlet_transition(std::size_t n_pitches, double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet alpha must be positive");
  RowMatrix t(static_cast<Eigen::Index>(n_pitches), Eigen::Index(n_pitches));
  for (std::size_t r = 0; r < n_pitches; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < n_pitches; ++c) {
      // Floor keeps every transition possible so oracle IC stays finite.
      const double g = std::max(rng.gamma(alpha), 1e-6);
      t(Eigen::Index(r), Eigen::Index(c)) = g;
      total += g;
    }
    t.row(Eigen::Index(r)) /= total;
  }
  return t;
}

std::vector<double> stationary_distribution(const RowMatrix& transition) {
  const auto n = transition.rows();
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(n, 1.0 / double(n));
  for (int it = 0; it < 10000; ++it) {
    Eigen::RowVectorXd next = pi * transition;
    next /= next.sum();
    const double diff = (next - pi).cwiseAbs().sum();
    pi = next;
    if (diff < 1e-15) break;
  }
  return {pi.data(), pi.data() + n};
}

RowMatrix pitch_codes(std::size_t n_pitches, std::size_t pitch_dim) {
  RowMatrix codes = RowMatrix::Zero(Eigen::Index(n_pitches), Eigen::Index(pitch_dim));
  for (std::size_t p = 0; p < n_pitches; ++p) {
    if (p < pitch_dim)
      codes(Eigen::Index(p), Eigen::Index(p)) = 1.0;
    else
      codes(Eigen::Index(p), Eigen::Index(p - pitch_dim)) = -1.0;
  }
  return codes;
}

namespace {

struct Embedding {
  Eigen::VectorXd pitch_gain;  // per pitch axis
  double nuisance_gain = 0.0;
  RowMatrix rotation;          // latent_dim × latent_dim, applied as frame·Rᵀ
  bool rotate = false;
};

Embedding make_embedding(const MarkovMelodySpec& spec) {
  const std::size_t L = spec.latent_dim, P = spec.pitch_dim;
  const double pp2 = spec.pitch_power * spec.pitch_power;
  const double np2 = spec.nuisance_power * spec.nuisance_power;
  // Mean per-dimension second moment of the aligned construction.
  const double per_dim = (pp2 + double(L - P) * np2) / double(L);

  Embedding e;
  e.pitch_gain = Eigen::VectorXd::Constant(Eigen::Index(P), spec.pitch_power);
  e.nuisance_gain = spec.nuisance_power;
  if (spec.construction == Construction::kUnaligned) {
    const auto pi = stationary_distribution(spec.transition);
    std::vector<double> axis_mass(P, 0.0);
    for (std::size_t p = 0; p < spec.n_pitches; ++p) axis_mass[p % P] += pi[p];
    for (std::size_t j = 0; j < P; ++j) {
      if (axis_mass[j] < 1e-9) throw std::invalid_argument("melody: pitch axis never visited");
      e.pitch_gain[Eigen::Index(j)] = std::sqrt(per_dim / axis_mass[j]);
    }
    e.nuisance_gain = std::sqrt(per_dim);
    Rng rng = Rng::stream(spec.rotation_seed, Stream::kInit, 0xB0B);
    e.rotation = metrics::FeatureMap::random(L, 1, rng).basis.matrix();
    e.rotate = true;
  }
  if (spec.normalize) {
    const double s = 1.0 / std::sqrt(per_dim);
    e.pitch_gain *= s;
    e.nuisance_gain *= s;
  }
  return e;
}

}  // namespace

std::vector<int> sample_pitch_path(const MarkovMelodySpec& spec, std::size_t length, Rng& rng) {
  const auto pi = stationary_distribution(spec.transition);
  auto draw = [&](auto probs) {
    double u = rng.uniform(), acc = 0.0;
    for (std::size_t k = 0; k < spec.n_pitches; ++k) {
      acc += probs(k);
      if (u < acc) return int(k);
    }
    return int(spec.n_pitches - 1);
  };
  std::vector<int> path(length);
  for (std::size_t i = 0; i < length; ++i) {
    if (i == 0)
      path[i] = draw([&](std::size_t k) { return pi[k]; });
    else
      path[i] = draw([&](std::size_t k) { return spec.transition(path[i - 1], Eigen::Index(k)); });
  }
  return path;
}

RowMatrix embed_pitches(const MarkovMelodySpec& spec, std::span<const int> pitches, Rng& rng) {
  const auto e = make_embedding(spec);
  const auto codes = pitch_codes(spec.n_pitches, spec.pitch_dim);
  const auto L = Eigen::Index(spec.latent_dim), P = Eigen::Index(spec.pitch_dim);
  RowMatrix frames(static_cast<Eigen::Index>(pitches.size()), L);
  for (std::size_t i = 0; i < pitches.size(); ++i) {
    const int p = pitches[i];
    if (p < 0 || std::size_t(p) >= spec.n_pitches) throw std::invalid_argument("melody: pitch out of range");
    for (Eigen::Index j = 0; j < P; ++j)
      frames(Eigen::Index(i), j) = codes(p, j) * e.pitch_gain[j];
    for (Eigen::Index j = P; j < L; ++j) frames(Eigen::Index(i), j) = e.nuisance_gain * rng.normal();
  }
  if (e.rotate) frames = frames * e.rotation.transpose();
  return frames;
}

MelodyData gen_melody_latents(const MarkovMelodySpec& spec, std::size_t n_seqs, Rng& rng) {
  spec.validate();
  MelodyData out;
  out.latents = Tensor({n_seqs, spec.seq_len, spec.latent_dim});
  const std::size_t frame_block = spec.seq_len * spec.latent_dim;
  for (std::size_t s = 0; s < n_seqs; ++s) {
    auto path = sample_pitch_path(spec, spec.seq_len, rng);
    const RowMatrix frames = embed_pitches(spec, path, rng);
    std::copy(frames.data(), frames.data() + frame_block, out.latents.data().begin() + s * frame_block);
    out.pitches.push_back(std::move(path));
  }
  return out;
}

RowMatrix pitch_readout(const MarkovMelodySpec& spec) {
  spec.validate();
  const auto e = make_embedding(spec);
  const auto L = Eigen::Index(spec.latent_dim), P = Eigen::Index(spec.pitch_dim);
  RowMatrix m = RowMatrix::Zero(L, P);
  for (Eigen::Index j = 0; j < P; ++j) m(j, j) = 1.0 / e.pitch_gain[j];
  if (e.rotate) m = e.rotation * m;
  return m;
}

std::vector<double> oracle_ic(const MarkovMelodySpec& spec, std::span<const int> pitches) {
  const auto pi = stationary_distribution(spec.transition);
  std::vector<double> ic(pitches.size());
  for (std::size_t i = 0; i < pitches.size(); ++i) {
    const double p = i == 0 ? pi[std::size_t(pitches[0])] : spec.transition(pitches[i - 1], pitches[i]);
    if (!(p > 0.0)) throw std::invalid_argument("oracle_ic: zero-probability transition");
    ic[i] = -std::log(p);
  }
  return ic;
}

// --- stimulus and EEG -------------------------------------------------------

Stimulus gen_stimulus(std::span<const int> pitches, const StimulusSpec& spec, Rng& rng) {
  if (!(spec.sample_rate > 0.0) || spec.audio_oversample == 0)
    throw std::invalid_argument("stimulus: bad rates");
  static constexpr int kScale[] = {0, 2, 4, 5, 7, 9, 11, 12, 14, 16, 17, 19, 21, 23, 24};
  const double audio_rate = spec.sample_rate * double(spec.audio_oversample);
  const auto note_len = std::size_t(std::lround(spec.note_ms * spec.sample_rate / 1000.0));
  const auto rest_len = std::size_t(std::lround(spec.rest_ms * spec.sample_rate / 1000.0));
  if (note_len == 0) throw std::invalid_argument("stimulus: note shorter than one sample");

  Stimulus st;
  auto append = [&](int note, std::size_t samples, double freq, double loud) {
    st.note_index.insert(st.note_index.end(), samples, note);
    st.voiced.insert(st.voiced.end(), samples, note >= 0);
    const std::size_t n_audio = samples * spec.audio_oversample;
    for (std::size_t a = 0; a < n_audio; ++a) {
      const double tsec = double(a) / audio_rate;
      double amp = 0.0;
      if (note >= 0) {
        const double attack = std::min(1.0, tsec / 0.01);
        amp = loud * attack * std::exp(-tsec / 0.15);
      }
      st.waveform.push_back(amp * std::sin(2.0 * std::numbers::pi * freq * tsec));
    }
  };
  for (std::size_t i = 0; i < pitches.size(); ++i) {
    const int p = pitches[i];
    if (p < 0 || std::size_t(p) >= std::size(kScale)) throw std::invalid_argument("stimulus: pitch out of range");
    const double freq = 110.0 * std::pow(2.0, kScale[p] / 12.0);
    append(int(i), note_len, freq, 0.5 + rng.uniform());
    if (rest_len > 0 && i + 1 < pitches.size() && rng.uniform() < spec.rest_prob)
      append(-1, rest_len, 0.0, 0.0);
  }
  return st;
}

std::vector<double> note_ic_series(const Stimulus& stimulus, std::span<const double> note_ic) {
  std::vector<double> out(stimulus.note_index.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int n = stimulus.note_index[i];
    if (n < 0) continue;
    if (std::size_t(n) >= note_ic.size()) throw std::invalid_argument("note_ic_series: missing note IC");
    out[i] = note_ic[std::size_t(n)];
  }
  return out;
}

void SyntheticEEGSpec::validate() const {
  if (n_channels == 0 || n_coupled > n_channels) throw std::invalid_argument("eeg: bad channel counts");
  if (n_participants == 0 || n_trials == 0) throw std::invalid_argument("eeg: empty dataset");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("eeg: sample_rate must be positive");
  if (!(noise_power >= 0.0)) throw std::invalid_argument("eeg: noise_power must be >= 0");
  if (!(lag_max_ms > lag_min_ms)) throw std::invalid_argument("eeg: empty lag window");
  if (!(kernel_peak_ms > 0.0)) throw std::invalid_argument("eeg: kernel peak must be positive");
  if (lag_min_ms > 0.0 || 4.0 * kernel_peak_ms > lag_max_ms)
    throw std::invalid_argument("eeg: kernel support exceeds the lag window");
}

std::vector<double> biphasic_kernel(double sample_rate, double peak_ms, double support_ms) {
  const auto n = std::size_t(std::floor(support_ms * sample_rate / 1000.0)) + 1;
  std::vector<double> k(n);
  const double s1 = peak_ms / 3.0, s2 = peak_ms / 2.0;
  double peak = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    const double tau = 1000.0 * double(l) / sample_rate;
    k[l] = std::exp(-0.5 * std::pow((tau - peak_ms) / s1, 2)) -
           0.5 * std::exp(-0.5 * std::pow((tau - 2.0 * peak_ms) / s2, 2));
    peak = std::max(peak, std::abs(k[l]));
  }
  for (auto& v : k) v /= peak;
  return k;
}

std::vector<std::vector<ChannelKernels>> gen_kernels(const SyntheticEEGSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<std::vector<ChannelKernels>> out(spec.n_participants);
  for (auto& participant : out) {
    const double jitter = 0.85 + 0.3 * rng.uniform();
    for (std::size_t c = 0; c < spec.n_channels; ++c) {
      ChannelKernels ck;
      const double peak = spec.kernel_peak_ms * jitter;
      const double support = 4.0 * spec.kernel_peak_ms;
      ck.envelope = biphasic_kernel(spec.sample_rate, 0.7 * peak, support);
      const double env_gain = 0.5 + rng.uniform();
      for (auto& v : ck.envelope) v *= env_gain;
      ck.ic = biphasic_kernel(spec.sample_rate, peak, support);
      const double ic_gain = c < spec.n_coupled ? 0.7 + 0.6 * rng.uniform() : 0.0;
      for (auto& v : ck.ic) v *= ic_gain;
      participant.push_back(std::move(ck));
    }
  }
  return out;
}

std::vector<double> convolve_causal(std::span<const double> signal, std::span<const double> kernel) {
  std::vector<double> y(signal.size(), 0.0);
  for (std::size_t t = 0; t < signal.size(); ++t) {
    const std::size_t lmax = std::min(kernel.size(), t + 1);
    double acc = 0.0;
    for (std::size_t l = 0; l < lmax; ++l) acc += kernel[l] * signal[t - l];
    y[t] = acc;
  }
  return y;
}

std::vector<double> pink_noise(std::size_t n, double variance, Rng& rng) {
  if (n == 0) return {};
  std::vector<double> white(n);
  for (auto& v : white) v = rng.normal();
  auto spec = metrics::fft_real(white);
  spec[0] = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t f = std::min(k, n - k);
    spec[k] /= std::sqrt(double(f));
  }
  const auto back = metrics::ifft(spec);
  std::vector<double> out(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += (out[i] = back[i].real());
  mean /= double(n);
  double ss = 0.0;
  for (auto& v : out) {
    v -= mean;
    ss += v * v;
  }
  const double scale = ss > 0.0 ? std::sqrt(variance * double(n) / ss) : 0.0;
  for (auto& v : out) v *= scale;
  return out;
}

namespace {

std::pair<double, double> pooled_moments(std::span<const TrialPredictors> trials, bool use_ic) {
  double s = 0.0, ss = 0.0;
  std::size_t n = 0;
  for (const auto& tr : trials) {
    for (double v : use_ic ? tr.ic : tr.envelope) {
      s += v;
      ss += v * v;
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("eeg: empty predictors");
  const double mean = s / double(n);
  const double var = std::max(ss / double(n) - mean * mean, 0.0);
  return {mean, var > 0.0 ? std::sqrt(var) : 1.0};
}

}  // namespace

std::vector<std::vector<RowMatrix>> gen_synthetic_eeg(
    const SyntheticEEGSpec& spec, std::span<const TrialPredictors> trials,
    const std::vector<std::vector<ChannelKernels>>& kernels, Rng& rng) {
  spec.validate();
  if (trials.size() != spec.n_trials) throw std::invalid_argument("eeg: trial count mismatch");
  if (kernels.size() != spec.n_participants) throw std::invalid_argument("eeg: kernel count mismatch");
  const auto [ic_mean, ic_sd] = pooled_moments(trials, true);
  const auto [env_mean, env_sd] = pooled_moments(trials, false);

  std::vector<std::vector<double>> ic_z(trials.size()), env_z(trials.size());
  for (std::size_t t = 0; t < trials.size(); ++t) {
    if (trials[t].ic.size() != trials[t].envelope.size())
      throw std::invalid_argument("eeg: predictor length mismatch");
    for (double v : trials[t].ic) ic_z[t].push_back((v - ic_mean) / ic_sd);
    for (double v : trials[t].envelope) env_z[t].push_back((v - env_mean) / env_sd);
  }

  std::vector<std::vector<RowMatrix>> out(spec.n_participants);
  for (std::size_t p = 0; p < spec.n_participants; ++p) {
    if (kernels[p].size() != spec.n_channels) throw std::invalid_argument("eeg: kernel channel mismatch");
    for (std::size_t t = 0; t < trials.size(); ++t) {
      const std::size_t T = ic_z[t].size();
      RowMatrix y(static_cast<Eigen::Index>(T), Eigen::Index(spec.n_channels));
      for (std::size_t c = 0; c < spec.n_channels; ++c) {
        const auto a = convolve_causal(ic_z[t], kernels[p][c].ic);
        const auto b = convolve_causal(env_z[t], kernels[p][c].envelope);
        const auto noise = pink_noise(T, spec.noise_power, rng);
        for (std::size_t i = 0; i < T; ++i)
          y(Eigen::Index(i), Eigen::Index(c)) = spec.ic_gain * a[i] + spec.env_gain * b[i] + noise[i];
      }
      out[p].push_back(std::move(y));
    }
  }
  return out;
}

}  // namespace pald::synth
