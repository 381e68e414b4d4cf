// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "pald/numerics/rng.hpp"
#include "pald/numerics/tensor.hpp"

namespace pald::flow {

/// Time-dependent vector field v(x, τ) on R^d, evaluated row-wise on a batch.
/// τ = 0 is data, τ = 1 is the standard normal prior.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual std::size_t dim() const = 0;
  virtual RowMatrix velocity(const RowMatrix& x, double tau) const = 0;
  /// Row-wise Jacobian-vector product (∂v/∂x)·dir.
  virtual RowMatrix jvp(const RowMatrix& x, double tau, const RowMatrix& dir) const = 0;
  /// Row-wise trace of ∂v/∂x. Default: d JVPs against the basis vectors.
  virtual Eigen::VectorXd exact_divergence(const RowMatrix& x, double tau) const;
  /// Velocity into v and the exact divergence as the result. Fields that share
  /// work between the two override this.
  virtual Eigen::VectorXd velocity_and_divergence(const RowMatrix& x, double tau, RowMatrix& v) const;
};

/// Largest dimension for which the exact divergence is allowed.
inline constexpr std::size_t kMaxExactDivergenceDim = 64;

/// v = x·Aᵀ + b (constant in τ).
class LinearField final : public VelocityField {
 public:
  LinearField(RowMatrix a, Eigen::RowVectorXd b);
  std::size_t dim() const override { return std::size_t(a_.rows()); }
  RowMatrix velocity(const RowMatrix& x, double tau) const override;
  RowMatrix jvp(const RowMatrix& x, double tau, const RowMatrix& dir) const override;
  Eigen::VectorXd exact_divergence(const RowMatrix& x, double tau) const override;

 private:
  RowMatrix a_;
  Eigen::RowVectorXd b_;
};

/// Exact straight-path velocity for standard normal data under
/// x_τ = (1−τ)x₀ + τx₁: v = ((2τ−1)/(2τ²−2τ+1))·x. The marginal at τ is
/// N(0, s_τ² I) with s_τ² = (1−τ)² + τ².
class GaussianPathField final : public VelocityField {
 public:
  explicit GaussianPathField(std::size_t dim) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  static double coefficient(double tau);
  RowMatrix velocity(const RowMatrix& x, double tau) const override;
  RowMatrix jvp(const RowMatrix& x, double tau, const RowMatrix& dir) const override;
  Eigen::VectorXd exact_divergence(const RowMatrix& x, double tau) const override;

 private:
  std::size_t dim_;
};

enum class DivergenceMode { kExact, kHutchinson };

struct DivergenceSpec {
  DivergenceMode mode = DivergenceMode::kExact;
  std::size_t probes = 1;  // Rademacher probes for kHutchinson
};

/// Row-wise divergence. Hutchinson needs an rng.
Eigen::VectorXd divergence(const VelocityField& field, const RowMatrix& x, double tau,
                           const DivergenceSpec& spec, Rng* rng = nullptr);

/// Fixed-step RK4 from t_start to t_end (either direction).
RowMatrix ode_integrate(const VelocityField& field, const RowMatrix& x, double t_start, double t_end,
                        std::size_t steps);

/// log p_t(x) = log N(x₁; 0, I) + ∫_t^1 div v dτ, with the state and the
/// accumulated divergence integrated jointly by RK4.
Eigen::VectorXd log_density(const VelocityField& field, const RowMatrix& x, double t, std::size_t steps,
                            const DivergenceSpec& spec = {}, Rng* rng = nullptr);

/// −log p_t(x_t) per row, averaged over n_draws noisings x_t = (1−t)x + t·ε.
/// At t = 0 this is −log_density(x, 0) and no noise is drawn.
Eigen::VectorXd ic_at_noise_level(const VelocityField& field, const RowMatrix& x, double t_level,
                                  std::size_t n_draws, std::size_t steps, Rng& rng,
                                  const DivergenceSpec& spec = {});

double standard_normal_logpdf(const Eigen::Ref<const Eigen::RowVectorXd>& x);

}  // namespace pald::flow
