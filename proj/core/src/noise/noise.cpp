// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/noise/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pald::noise {

void NoiseSchedule::validate() const {
  if (!(s > 0.0)) throw std::invalid_argument("noise schedule: s must be > 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("noise schedule: gamma must be > 0");
  if (!std::isfinite(m)) throw std::invalid_argument("noise schedule: m must be finite");
}

double sample_t(const NoiseSchedule& schedule, Rng& rng) {
  const double eps = rng.normal(schedule.m, schedule.s);
  double t = 1.0 / (1.0 + std::exp(-eps));
  // Keep t strictly inside (0, 1) even when the sigmoid saturates.
  const double tiny = std::numeric_limits<double>::epsilon();
  return std::clamp(t, tiny, 1.0 - tiny);
}

double logit_normal_cdf(double t, double m, double s) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double logit = std::log(t / (1.0 - t));
  return 0.5 * std::erfc(-(logit - m) / (s * std::sqrt(2.0)));
}

Tensor draw_noise(const Shape& shape, double gamma, Rng& rng) {
  return rng.normal_tensor(shape, gamma);
}

Tensor mix(const Tensor& z, double t, const Tensor& noise) {
  if (z.shape() != noise.shape()) throw std::invalid_argument("mix: shape mismatch");
  Tensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = (1.0 - t) * z[i] + t * noise[i];
  return out;
}

NoisedLatent noise_latents(const Tensor& z, double t, double gamma, std::uint64_t noise_seed) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("noise_latents: t=" + std::to_string(t) + " outside [0,1]");
  }
  Rng rng(noise_seed);
  const Tensor n = draw_noise(z.shape(), gamma, rng);
  return {mix(z, t, n), t, noise_seed};
}

double snr_of_t(double t, double z_power, double gamma) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("snr_of_t: t outside [0,1]");
  if (!(z_power > 0.0)) throw std::invalid_argument("snr_of_t: z_power must be > 0");
  if (t == 0.0) return std::numeric_limits<double>::infinity();
  const double ratio = (1.0 - t) / t;
  return ratio * ratio * z_power / (gamma * gamma);
}

double t_of_snr(double snr, double z_power, double gamma) {
  if (std::isnan(snr) || snr < 0.0) throw std::invalid_argument("t_of_snr: snr must be >= 0");
  if (!(z_power > 0.0)) throw std::invalid_argument("t_of_snr: z_power must be > 0");
  if (std::isinf(snr)) return 0.0;
  return 1.0 / (1.0 + std::sqrt(snr * gamma * gamma / z_power));
}

double endpoint_snr(double z_power, double gamma) { return z_power / (gamma * gamma); }

std::vector<double> spectral_snr_profile(std::span<const double> signal_psd, double t,
                                         double gamma) {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("spectral_snr_profile: t outside (0,1]");
  bool any = false;
  for (double p : signal_psd) {
    if (p < 0.0) throw std::invalid_argument("spectral_snr_profile: negative power");
    any = any || p > 0.0;
  }
  if (!any) throw std::invalid_argument("spectral_snr_profile: all-zero power spectrum");
  const double coeff = (1.0 - t) * (1.0 - t) / (t * t * gamma * gamma);
  std::vector<double> out(signal_psd.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = coeff * signal_psd[i];
  return out;
}

std::vector<double> ic_t_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 9; ++i) grid.push_back(i / 10.0);
  return grid;
}

std::vector<double> table_snr_levels() {
  return {std::numeric_limits<double>::infinity(), 4.0, 1.0, 0.25};
}

}  // namespace pald::noise
