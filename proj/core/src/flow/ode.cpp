// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/flow/ode.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pald/error.hpp"

namespace pald::flow {

Eigen::VectorXd VelocityField::exact_divergence(const RowMatrix& x, double tau) const {
  const auto d = Eigen::Index(dim());
  Eigen::VectorXd div = Eigen::VectorXd::Zero(x.rows());
  RowMatrix dir = RowMatrix::Zero(x.rows(), d);
  for (Eigen::Index j = 0; j < d; ++j) {
    dir.col(j).setOnes();
    div += jvp(x, tau, dir).col(j);
    dir.col(j).setZero();
  }
  return div;
}

Eigen::VectorXd VelocityField::velocity_and_divergence(const RowMatrix& x, double tau,
                                                       RowMatrix& v) const {
  v = velocity(x, tau);
  return exact_divergence(x, tau);
}

LinearField::LinearField(RowMatrix a, Eigen::RowVectorXd b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != a_.cols() || b_.size() != a_.rows())
    throw std::invalid_argument("LinearField: shape mismatch");
}

RowMatrix LinearField::velocity(const RowMatrix& x, double) const {
  RowMatrix v = x * a_.transpose();
  v.rowwise() += b_;
  return v;
}

RowMatrix LinearField::jvp(const RowMatrix&, double, const RowMatrix& dir) const {
  return dir * a_.transpose();
}

Eigen::VectorXd LinearField::exact_divergence(const RowMatrix& x, double) const {
  return Eigen::VectorXd::Constant(x.rows(), a_.trace());
}

double GaussianPathField::coefficient(double tau) {
  return (2.0 * tau - 1.0) / (2.0 * tau * tau - 2.0 * tau + 1.0);
}

RowMatrix GaussianPathField::velocity(const RowMatrix& x, double tau) const {
  return coefficient(tau) * x;
}

RowMatrix GaussianPathField::jvp(const RowMatrix&, double tau, const RowMatrix& dir) const {
  return coefficient(tau) * dir;
}

Eigen::VectorXd GaussianPathField::exact_divergence(const RowMatrix& x, double tau) const {
  return Eigen::VectorXd::Constant(x.rows(), double(dim_) * coefficient(tau));
}

Eigen::VectorXd divergence(const VelocityField& field, const RowMatrix& x, double tau,
                           const DivergenceSpec& spec, Rng* rng) {
  if (spec.mode == DivergenceMode::kExact) {
    if (field.dim() > kMaxExactDivergenceDim)
      throw std::invalid_argument("divergence: dimension too large for the exact trace");
    return field.exact_divergence(x, tau);
  }
  if (rng == nullptr) throw std::invalid_argument("divergence: Hutchinson estimator needs an rng");
  if (spec.probes == 0) throw std::invalid_argument("divergence: probes must be positive");
  Eigen::VectorXd div = Eigen::VectorXd::Zero(x.rows());
  RowMatrix eps(x.rows(), x.cols());
  for (std::size_t p = 0; p < spec.probes; ++p) {
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = rng->rademacher();
    div += (field.jvp(x, tau, eps).array() * eps.array()).rowwise().sum().matrix();
  }
  return div / double(spec.probes);
}

namespace {

void check_state(const RowMatrix& x, std::size_t dim) {
  if (std::size_t(x.cols()) != dim) throw std::invalid_argument("flow: state width != field dim");
  if (!x.allFinite()) throw NumericalError("flow: non-finite state");
}

}  // namespace

RowMatrix ode_integrate(const VelocityField& field, const RowMatrix& x, double t_start, double t_end,
                        std::size_t steps) {
  check_state(x, field.dim());
  if (steps == 0) throw std::invalid_argument("ode_integrate: steps must be positive");
  const double h = (t_end - t_start) / double(steps);
  RowMatrix y = x;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = t_start + double(s) * h;
    const RowMatrix k1 = field.velocity(y, t);
    const RowMatrix k2 = field.velocity(y + 0.5 * h * k1, t + 0.5 * h);
    const RowMatrix k3 = field.velocity(y + 0.5 * h * k2, t + 0.5 * h);
    const RowMatrix k4 = field.velocity(y + h * k3, t + h);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!y.allFinite()) throw NumericalError("ode_integrate: state diverged");
  return y;
}

double standard_normal_logpdf(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return -0.5 * x.squaredNorm() - 0.5 * double(x.size()) * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd log_density(const VelocityField& field, const RowMatrix& x, double t, std::size_t steps,
                            const DivergenceSpec& spec, Rng* rng) {
  check_state(x, field.dim());
  if (!(t >= 0.0 && t < 1.0)) throw std::invalid_argument("log_density: t must be in [0, 1)");
  if (steps == 0) throw std::invalid_argument("log_density: steps must be positive");
  if (spec.mode == DivergenceMode::kExact && field.dim() > kMaxExactDivergenceDim)
    throw std::invalid_argument("log_density: dimension too large for the exact trace");
  // Velocity and divergence at one stage. Hutchinson probes are redrawn at
  // every stage evaluation.
  auto stage = [&](const RowMatrix& y, double tau, RowMatrix& k) -> Eigen::VectorXd {
    if (spec.mode == DivergenceMode::kExact) return field.velocity_and_divergence(y, tau, k);
    k = field.velocity(y, tau);
    return divergence(field, y, tau, spec, rng);
  };
  const double h = (1.0 - t) / double(steps);
  RowMatrix y = x, k1, k2, k3, k4;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.rows());
  for (std::size_t s = 0; s < steps; ++s) {
    const double tau = t + double(s) * h;
    const Eigen::VectorXd d1 = stage(y, tau, k1);
    const Eigen::VectorXd d2 = stage(y + 0.5 * h * k1, tau + 0.5 * h, k2);
    const Eigen::VectorXd d3 = stage(y + 0.5 * h * k2, tau + 0.5 * h, k3);
    const Eigen::VectorXd d4 = stage(y + h * k3, tau + h, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    acc += (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
  }
  if (!y.allFinite() || !acc.allFinite()) throw NumericalError("log_density: integration diverged");
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = standard_normal_logpdf(y.row(i)) + acc[i];
  return out;
}

Eigen::VectorXd ic_at_noise_level(const VelocityField& field, const RowMatrix& x, double t_level,
                                  std::size_t n_draws, std::size_t steps, Rng& rng,
                                  const DivergenceSpec& spec) {
  check_state(x, field.dim());
  if (!(t_level >= 0.0 && t_level < 1.0))
    throw std::invalid_argument("ic_at_noise_level: t_level must be in [0, 1)");
  if (n_draws == 0) throw std::invalid_argument("ic_at_noise_level: n_draws must be positive");
  if (t_level == 0.0) return -log_density(field, x, 0.0, steps, spec, &rng);
  const auto M = Eigen::Index(n_draws), d = x.cols();
  // Row r·M + k holds draw k of input row r.
  RowMatrix xt(x.rows() * M, d);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index k = 0; k < M; ++k)
      for (Eigen::Index j = 0; j < d; ++j)
        xt(r * M + k, j) = (1.0 - t_level) * x(r, j) + t_level * rng.normal();
  const Eigen::VectorXd logp = log_density(field, xt, t_level, steps, spec, &rng);
  Eigen::VectorXd ic(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) ic[r] = -logp.segment(r * M, M).mean();
  return ic;
}

}  // namespace pald::flow
