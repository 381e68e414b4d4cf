// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <span>
#include <vector>

namespace pald::metrics {

/// Forward DFT of a real signal, all n bins (FFTW, unnormalized).
std::vector<std::complex<double>> fft_real(std::span<const double> x);

/// Inverse DFT, normalized by 1/n.
std::vector<std::complex<double>> ifft(std::span<const std::complex<double>> x);

}  // namespace pald::metrics
