// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pald/numerics/rng.hpp"
#include "pald/numerics/tensor.hpp"

namespace pald::noise {

/// Logit-normal interpolation-time distribution plus the noise scale γ.
/// t = sigmoid(ε), ε ~ N(m, s²); lower m means less noise on average.
struct NoiseSchedule {
  double m = -1.0;
  double s = 1.0;
  double gamma = 1.0;

  void validate() const;
};

struct NoisedLatent {
  Tensor z_prime;
  double t = 0.0;
  std::uint64_t noise_seed = 0;
};

double sample_t(const NoiseSchedule& schedule, Rng& rng);

/// CDF of the logit-normal distribution at t ∈ (0,1).
double logit_normal_cdf(double t, double m, double s);

/// n(γ) = γ·N(0, I) with the given shape.
Tensor draw_noise(const Shape& shape, double gamma, Rng& rng);

/// (1 − t)·z + t·n, elementwise. The single definition of the latent
/// noising mixture; training and evaluation both route through here.
Tensor mix(const Tensor& z, double t, const Tensor& noise);

/// Noises z at time t with noise drawn from Rng(noise_seed).
NoisedLatent noise_latents(const Tensor& z, double t, double gamma, std::uint64_t noise_seed);

/// SNR(t) = (1 − t)²·E[z²] / (t²·γ²). Returns +∞ at t = 0 and 0 at t = 1.
double snr_of_t(double t, double z_power, double gamma);

/// Inverse of snr_of_t: t = 1 / (1 + √(snr·γ² / E[z²])). +∞ maps to 0.
double t_of_snr(double snr, double z_power, double gamma);

/// Endpoint form E[z²]/γ²: the SNR of z against n(γ) before interpolation.
double endpoint_snr(double z_power, double gamma);

/// Per-bin SNR of a noised signal whose PSD is expressed in white-noise
/// units (unit-variance white noise has PSD 1 in every bin):
/// SNR(f, t) = (1 − t)²·P(f) / (t²·γ²).
std::vector<double> spectral_snr_profile(std::span<const double> signal_psd, double t,
                                         double gamma);

/// Noise levels used for IC evaluation: 0.1, 0.2, …, 0.9.
std::vector<double> ic_t_grid();

/// Signal levels used for reconstruction sweeps: ∞, 4, 1, 0.25.
std::vector<double> table_snr_levels();

}  // namespace pald::noise
