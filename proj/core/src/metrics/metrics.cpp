// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/metrics/metrics.hpp"

#include <Eigen/QR>

#include <cmath>
#include <stdexcept>

#include "pald/metrics/fft.hpp"

namespace pald::metrics {

FeatureMap FeatureMap::random(std::size_t groups, std::size_t group_dim, Rng& rng) {
  const std::size_t dim = groups * group_dim;
  RowMatrix g(dim, dim);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(g)};
  Eigen::MatrixXd q = qr.householderQ();
  // Fix column signs so the factorization is unique.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  FeatureMap fm;
  fm.basis = Tensor::from_matrix(RowMatrix(q));
  fm.groups = groups;
  fm.group_dim = group_dim;
  return fm;
}

RowMatrix FeatureMap::project(const RowMatrix& x) const {
  if (std::size_t(x.cols()) != dim()) throw std::invalid_argument("FeatureMap::project: dim mismatch");
  return x * basis.matrix();
}

double FeatureMap::orthonormality_error() const {
  const RowMatrix gram = basis.matrix().transpose() * basis.matrix();
  return (gram - RowMatrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

double si_sdr(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size()) throw std::invalid_argument("si_sdr: length mismatch");
  double ss = 0.0, se = 0.0, ee = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ss += reference[i] * reference[i];
    se += reference[i] * estimate[i];
    ee += estimate[i] * estimate[i];
  }
  if (!(ss > 0.0)) throw std::invalid_argument("si_sdr: zero reference");
  if (!(ee > 0.0)) throw std::invalid_argument("si_sdr: zero estimate");
  const double alpha = se / ss;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * reference[i];
    target += t * t;
    residual += (t - estimate[i]) * (t - estimate[i]);
  }
  if (residual <= target * 1e-20) return kSiSdrCapDb;
  return std::min(kSiSdrCapDb, 10.0 * std::log10(target / residual));
}

std::vector<double> group_error(const RowMatrix& x, const RowMatrix& x_hat,
                                const FeatureMap& features) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) {
    throw std::invalid_argument("group_error: shape mismatch");
  }
  const RowMatrix c = features.project(x - x_hat);
  std::vector<double> e(features.groups, 0.0);
  for (std::size_t k = 0; k < features.groups; ++k) {
    e[k] = c.middleCols(Eigen::Index(k * features.group_dim), Eigen::Index(features.group_dim))
               .squaredNorm();
  }
  return e;
}

std::vector<double> psd(std::span<const double> signal, std::size_t n_fft) {
  if (n_fft == 0 || n_fft > signal.size()) throw std::invalid_argument("psd: need 0 < n_fft <= length");
  const std::size_t frames = signal.size() / n_fft;
  const std::size_t bins = n_fft / 2 + 1;
  std::vector<double> out(bins, 0.0);
  const double norm = 1.0 / (double(n_fft) * double(n_fft) * double(frames));
  for (std::size_t f = 0; f < frames; ++f) {
    const auto spec = fft_real(signal.subspan(f * n_fft, n_fft));
    for (std::size_t k = 0; k < bins; ++k) {
      double p = std::norm(spec[k]);
      if (k != 0 && !(n_fft % 2 == 0 && k == n_fft / 2)) p += std::norm(spec[n_fft - k]);
      out[k] += p * norm;
    }
  }
  return out;
}

std::vector<double> white_noise_psd(std::size_t n_fft, double variance) {
  std::vector<double> out(n_fft / 2 + 1, 2.0 * variance / double(n_fft));
  out[0] = variance / double(n_fft);
  if (n_fft % 2 == 0) out.back() = variance / double(n_fft);
  return out;
}

std::vector<double> to_white_units(std::span<const double> one_sided, std::size_t n_fft) {
  const auto unit = white_noise_psd(n_fft, 1.0);
  if (unit.size() != one_sided.size()) throw std::invalid_argument("to_white_units: bin count");
  std::vector<double> out(unit.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = one_sided[k] / unit[k];
  return out;
}

}  // namespace pald::metrics
