// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/metrics/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace pald::metrics {
namespace {

// The FFTW planner is not re-entrant; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::complex<double>> run_dft(std::vector<std::complex<double>> data, int sign) {
  const int n = static_cast<int>(data.size());
  if (n == 0) return data;
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return data;
}

}  // namespace

std::vector<std::complex<double>> fft_real(std::span<const double> x) {
  std::vector<std::complex<double>> data(x.begin(), x.end());
  return run_dft(std::move(data), FFTW_FORWARD);
}

std::vector<std::complex<double>> ifft(std::span<const std::complex<double>> x) {
  auto out = run_dft(std::vector<std::complex<double>>(x.begin(), x.end()), FFTW_BACKWARD);
  const double inv = out.empty() ? 0.0 : 1.0 / double(out.size());
  for (auto& v : out) v *= inv;
  return out;
}

}  // namespace pald::metrics
