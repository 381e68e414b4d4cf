// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "../common/gradcheck.hpp"
#include "pald/error.hpp"
#include "pald/flow/flow_model.hpp"
#include "pald/flow/ode.hpp"
#include "pald/stats/stats.hpp"
#include "pald/synthdata/synthdata.hpp"

namespace pald::flow {
namespace {

RowMatrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  RowMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

double gaussian_logpdf(const Eigen::RowVectorXd& x, double var) {
  return -0.5 * x.squaredNorm() / var - 0.5 * double(x.size()) * std::log(2.0 * std::numbers::pi * var);
}

double s2(double tau) { return (1 - tau) * (1 - tau) + tau * tau; }

// --- integrator -------------------------------------------------------------

TEST(Ode, ExponentialGrowthAtHundredSteps) {
  const LinearField f(RowMatrix::Identity(1, 1), Eigen::RowVectorXd::Zero(1));
  const RowMatrix x = ode_integrate(f, RowMatrix::Ones(1, 1), 0.0, 1.0, 100);
  EXPECT_NEAR(x(0, 0), std::numbers::e, 1e-6);
}

TEST(Ode, ZeroFieldLeavesStateAlone) {
  Rng rng(1);
  const RowMatrix x = random_matrix(4, 3, rng);
  const LinearField zero(RowMatrix::Zero(3, 3), Eigen::RowVectorXd::Zero(3));
  EXPECT_EQ(ode_integrate(zero, x, 0.0, 1.0, 7), x);
}

TEST(Ode, FourthOrderConvergence) {
  const LinearField f(RowMatrix::Identity(1, 1), Eigen::RowVectorXd::Zero(1));
  for (std::size_t n : {4u, 8u, 16u}) {
    const double e1 = std::abs(ode_integrate(f, RowMatrix::Ones(1, 1), 0, 1, n)(0, 0) - std::numbers::e);
    const double e2 = std::abs(ode_integrate(f, RowMatrix::Ones(1, 1), 0, 1, 2 * n)(0, 0) - std::numbers::e);
    EXPECT_GE(e1 / e2, 8.0) << n;
  }
}

TEST(Ode, BackwardIntegrationInvertsForward) {
  Rng rng(2);
  const LinearField f(random_matrix(3, 3, rng, 0.5), random_matrix(1, 3, rng));
  const RowMatrix x = random_matrix(5, 3, rng);
  const RowMatrix back = ode_integrate(f, ode_integrate(f, x, 0, 1, 200), 1, 0, 200);
  EXPECT_LT((back - x).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Ode, RejectsBadArguments) {
  const GaussianPathField f(2);
  EXPECT_THROW(ode_integrate(f, RowMatrix::Zero(1, 3), 0, 1, 10), std::invalid_argument);
  EXPECT_THROW(ode_integrate(f, RowMatrix::Zero(1, 2), 0, 1, 0), std::invalid_argument);
  RowMatrix bad = RowMatrix::Zero(1, 2);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(ode_integrate(f, bad, 0, 1, 10), NumericalError);
}

// --- divergence -------------------------------------------------------------

TEST(Divergence, ExactTraceOfLinearField) {
  RowMatrix a(2, 2);
  a << 1, 2, 3, 4;
  const LinearField f(a, Eigen::RowVectorXd::Zero(2));
  const RowMatrix x = RowMatrix::Random(3, 2);
  const auto div = divergence(f, x, 0.3, {});
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(div[i], 5.0, 1e-10);
  // The generic JVP path agrees.
  const auto generic = f.VelocityField::exact_divergence(x, 0.3);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(generic[i], 5.0, 1e-10);
}

TEST(Divergence, ConstantFieldIsDivergenceFree) {
  const LinearField f(RowMatrix::Zero(4, 4), Eigen::RowVectorXd::Ones(4));
  Rng rng(3);
  const auto div = divergence(f, random_matrix(2, 4, rng), 0.0, {DivergenceMode::kHutchinson, 5}, &rng);
  EXPECT_EQ(div.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Divergence, HutchinsonIsUnbiased) {
  Rng rng(4);
  const LinearField f(random_matrix(8, 8, rng), Eigen::RowVectorXd::Zero(8));
  const RowMatrix x = random_matrix(1, 8, rng);
  std::vector<double> est(1000);
  for (auto& e : est) e = divergence(f, x, 0.0, {DivergenceMode::kHutchinson, 1}, &rng)[0];
  const double exact = divergence(f, x, 0.0, {})[0];
  EXPECT_LT(std::abs(stats::mean(est) - exact), 2.0 * stats::standard_error(est));
  EXPECT_THROW(divergence(f, x, 0.0, {DivergenceMode::kHutchinson, 1}, nullptr), std::invalid_argument);
}

TEST(Divergence, ExactModeRefusesHugeDimensions) {
  const GaussianPathField f(kMaxExactDivergenceDim + 1);
  EXPECT_THROW(divergence(f, RowMatrix::Zero(1, Eigen::Index(f.dim())), 0.5, {}), std::invalid_argument);
}

// --- log density ------------------------------------------------------------

TEST(LogDensity, GaussianFieldAtOrigin) {
  const GaussianPathField f(2);
  const auto lp = log_density(f, RowMatrix::Zero(1, 2), 0.0, 100);
  EXPECT_NEAR(lp[0], -std::log(2 * std::numbers::pi), 1e-3);
}

TEST(LogDensity, GaussianFieldMatchesClosedForm) {
  Rng rng(5);
  for (std::size_t d : {1u, 2u, 8u}) {
    const GaussianPathField f(d);
    const RowMatrix x = random_matrix(100, Eigen::Index(d), rng, 1.5);
    for (double t : {0.0, 0.3, 0.8}) {
      const auto lp = log_density(f, x, t, 100);
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        ASSERT_NEAR(lp[i], gaussian_logpdf(x.row(i), s2(t)), 1e-3) << "d=" << d << " t=" << t;
    }
  }
}

TEST(LogDensity, ZeroFieldGivesBaseDensity) {
  Rng rng(6);
  const LinearField zero(RowMatrix::Zero(3, 3), Eigen::RowVectorXd::Zero(3));
  const RowMatrix x = random_matrix(4, 3, rng);
  const auto lp = log_density(zero, x, 0.2, 10);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(lp[i], standard_normal_logpdf(x.row(i)), 1e-14);
}

TEST(LogDensity, HutchinsonAgreesOnAverage) {
  Rng rng(7);
  const GaussianPathField f(4);
  RowMatrix x = RowMatrix::Zero(400, 4);
  const auto exact = log_density(f, x, 0.0, 20);
  const auto hutch = log_density(f, x, 0.0, 20, {DivergenceMode::kHutchinson, 1}, &rng);
  // Isotropic field: every Rademacher probe gives the exact trace.
  EXPECT_LT((exact - hutch).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IcAtNoiseLevel, ZeroLevelIsNegativeLogDensity) {
  Rng rng(8), r2(8);
  const GaussianPathField f(3);
  const RowMatrix x = random_matrix(5, 3, rng);
  const auto ic = ic_at_noise_level(f, x, 0.0, 8, 50, r2);
  const auto lp = log_density(f, x, 0.0, 50);
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_EQ(ic[i], -lp[i]);
}

TEST(IcAtNoiseLevel, GaussianFieldClosedFormOfNoisedPoint) {
  Rng rng(9);
  const std::size_t d = 4;
  const GaussianPathField f(d);
  const RowMatrix x = random_matrix(6, Eigen::Index(d), rng);
  for (double t : {0.5, 0.9, 0.99}) {
    Rng a(100), b(100);
    const auto ic = ic_at_noise_level(f, x, t, 1, 100, a);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Eigen::RowVectorXd xt(d);
      for (std::size_t j = 0; j < d; ++j) xt[Eigen::Index(j)] = (1 - t) * x(i, Eigen::Index(j)) + t * b.normal();
      const double closed = 0.5 * double(d) * std::log(2 * std::numbers::pi * s2(t)) + xt.squaredNorm() / (2 * s2(t));
      EXPECT_NEAR(ic[i], closed, 1e-3) << t;
    }
  }
}

TEST(IcAtNoiseLevel, VarianceShrinksWithDraws) {
  const GaussianPathField f(2);
  const RowMatrix x = RowMatrix::Constant(3000, 2, 0.7);
  std::vector<double> var;
  for (std::size_t n : {1u, 4u, 16u}) {
    Rng rng(10 + n);
    const Eigen::VectorXd ic = ic_at_noise_level(f, x, 0.5, n, 10, rng);
    var.push_back((ic.array() - ic.mean()).square().sum() / double(ic.size() - 1));
  }
  EXPECT_NEAR(var[0] / var[1], 4.0, 0.6);
  EXPECT_NEAR(var[1] / var[2], 4.0, 0.6);
}

// --- flow model ---------------------------------------------------------------

FlowConfig tiny_config(std::size_t d = 3) {
  FlowConfig c;
  c.latent_dim = d;
  c.context_hidden = 8;
  c.velocity_hidden = 16;
  c.time_features = 4;
  c.batch = 4;
  c.lr = 1e-3;
  c.warmup = 20;
  return c;
}

Tensor random_sequences(std::size_t S, std::size_t L, std::size_t d, Rng& rng) {
  return rng.normal_tensor({S, L, d});
}

TEST(FlowModel, TimeFeatures) {
  const double tau[] = {0.0, 0.5};
  const RowMatrix f = time_features(tau, 4);
  EXPECT_EQ(f(0, 0), 0.0);
  EXPECT_EQ(f(0, 1), 1.0);
  EXPECT_NEAR(f(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(f(1, 3), -1.0, 1e-15);
}

TEST(FlowModel, LossGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    FlowConfig c = tiny_config();
    c.output_gain = 1.0;
    c.draws_per_frame = 2;
    auto m = FlowModel::create(c, seed);
    Rng rng(seed);
    const Tensor batch = random_sequences(2, 3, c.latent_dim, rng);
    const FlowNoise noise = draw_flow_noise(c, 2 * 3 * 2, rng);
    Gradients grads;
    flow_loss_gradients(m, batch, noise, grads);
    double worst = 0.0;
    const double h = 1e-5;
    for (auto& [name, t] : m.params) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double keep = t[i];
        t[i] = keep + h;
        const double up = flow_loss(m, batch, noise);
        t[i] = keep - h;
        const double down = flow_loss(m, batch, noise);
        t[i] = keep;
        worst = std::max(worst, testing::rel_err(grads.at(&t)[i], (up - down) / (2 * h)));
      }
    }
    EXPECT_LT(worst, 1e-4) << seed;
  }
}

TEST(FlowModel, InitialLossIsTwiceTheDimension) {
  FlowConfig c = tiny_config(8);
  c.output_gain = 1e-3;
  const auto m = FlowModel::create(c, 1);
  Rng rng(2);
  const Tensor batch = random_sequences(64, 16, 8, rng);
  const FlowNoise noise = draw_flow_noise(c, 64 * 16, rng);
  EXPECT_NEAR(flow_loss(m, batch, noise) / 16.0, 1.0, 0.1);
}

TEST(FlowModel, BatchOrderDoesNotMatter) {
  FlowConfig c = tiny_config();
  c.output_gain = 1.0;
  const auto m = FlowModel::create(c, 4);
  Rng rng(5);
  const std::size_t S = 4, L = 3, d = c.latent_dim;
  const Tensor batch = random_sequences(S, L, d, rng);
  const FlowNoise noise = draw_flow_noise(c, S * L, rng);
  const std::size_t perm[] = {2, 0, 3, 1};
  Tensor pb({S, L, d});
  FlowNoise pn{std::vector<double>(S * L), RowMatrix(S * L, d)};
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t i = 0; i < L; ++i) {
      const std::size_t src = perm[s] * L + i, dst = s * L + i;
      for (std::size_t j = 0; j < d; ++j) pb[dst * d + j] = batch[src * d + j];
      pn.t[dst] = noise.t[src];
      pn.x1.row(Eigen::Index(dst)) = noise.x1.row(Eigen::Index(src));
    }
  }
  Gradients g1, g2;
  const double l1 = flow_loss_gradients(m, batch, noise, g1);
  const double l2 = flow_loss_gradients(m, pb, pn, g2);
  EXPECT_NEAR(l1, l2, 1e-12 * l1);
  for (const auto& [name, t] : m.params)
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(g1.at(&t)[i], g2.at(&t)[i], 1e-12) << name;
}

TEST(FlowModel, ContextIsCausal) {
  const FlowConfig c = tiny_config();
  const auto m = FlowModel::create(c, 6);
  Rng rng(7);
  const std::size_t L = 6, d = c.latent_dim;
  Tensor a = random_sequences(1, L, d, rng);
  const RowMatrix ca = contexts(m, a);
  EXPECT_EQ(ca.row(0).cwiseAbs().maxCoeff(), 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    Tensor b = a;
    for (std::size_t f = i; f < L; ++f)
      for (std::size_t j = 0; j < d; ++j) b[f * d + j] += 1.0;
    const RowMatrix cb = contexts(m, b);
    for (std::size_t f = 0; f <= i; ++f) EXPECT_EQ(ca.row(Eigen::Index(f)), cb.row(Eigen::Index(f)));
    if (i + 1 < L) EXPECT_NE(ca.row(Eigen::Index(i + 1)), cb.row(Eigen::Index(i + 1)));
  }
}

TEST(FlowModel, FieldDerivativesMatchFiniteDifferences) {
  for (std::size_t layers : {1u, 2u, 3u}) {
    FlowConfig c = tiny_config(4);
    c.velocity_layers = layers;
    c.output_gain = 1.0;
    const auto m = FlowModel::create(c, 8 + layers);
    Rng rng(9);
    const RowMatrix ctx = random_matrix(5, 8, rng, 0.5);
    const ConditionalField f(m, ctx);
    const RowMatrix x = random_matrix(5, 4, rng);
    const double tau = 0.37, h = 1e-6;
    Eigen::VectorXd fd = Eigen::VectorXd::Zero(5);
    for (Eigen::Index j = 0; j < 4; ++j) {
      RowMatrix xp = x, xm = x;
      xp.col(j).array() += h;
      xm.col(j).array() -= h;
      fd += (f.velocity(xp, tau).col(j) - f.velocity(xm, tau).col(j)) / (2 * h);
    }
    const auto exact = f.exact_divergence(x, tau);
    const auto generic = f.VelocityField::exact_divergence(x, tau);
    RowMatrix v;
    const auto joint = f.velocity_and_divergence(x, tau, v);
    EXPECT_LT((exact - fd).cwiseAbs().maxCoeff(), 1e-7) << layers;
    EXPECT_LT((exact - generic).cwiseAbs().maxCoeff(), 1e-12) << layers;
    EXPECT_EQ(joint, exact);
    EXPECT_EQ(v, f.velocity(x, tau));

    // The field agrees with the graph-based velocity net.
    Graph g;
    BoundParameters p(g, m.params);
    const double taus[] = {tau, tau, tau, tau, tau};
    const Var parts[] = {g.constant(Tensor::from_matrix(x)),
                         g.constant(Tensor::from_matrix(time_features(taus, c.time_features))),
                         g.constant(Tensor::from_matrix(ctx))};
    const Tensor vg = m.velocity.forward(p, ops::concat_cols(parts)).value();
    EXPECT_LT((vg.matrix() - v).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SequenceIc, DeterministicCausalAndReducesAtZero) {
  const FlowConfig c = tiny_config();
  const auto m = FlowModel::create(c, 10);
  Rng rng(11);
  const std::size_t L = 5, d = c.latent_dim;
  Tensor seqs({2, L, d});
  const Tensor one = random_sequences(1, L, d, rng);
  for (std::size_t i = 0; i < L * d; ++i) seqs[i] = seqs[L * d + i] = one[i];
  IcOptions o;
  o.t_level = 0.4;
  o.ode_steps = 20;
  const RowMatrix ic = sequence_ic(m, seqs, o, 3);
  EXPECT_EQ(ic, sequence_ic(m, seqs, o, 3));
  EXPECT_TRUE(ic.allFinite());

  // Same sequence, same per-sequence stream: a single-sequence run reproduces row 0.
  EXPECT_EQ(sequence_ic(m, one, o, 3).row(0), ic.row(0));

  // Perturbing frames after i leaves IC up to i untouched.
  Tensor shuffled = one;
  for (std::size_t j = 0; j < d; ++j) std::swap(shuffled[3 * d + j], shuffled[4 * d + j]);
  const RowMatrix ic2 = sequence_ic(m, shuffled, o, 3);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(ic2(0, i), ic(0, i));

  // t = 0: −log_density of the clean frame under its context.
  o.t_level = 0.0;
  const RowMatrix ic0 = sequence_ic(m, one, o, 3);
  const ConditionalField f(m, contexts(m, one));
  const auto lp = log_density(f, one.reshaped({L, d}).matrix(), 0.0, o.ode_steps);
  for (Eigen::Index i = 0; i < Eigen::Index(L); ++i) EXPECT_EQ(ic0(0, i), -lp[i]);
  EXPECT_THROW((o.t_level = 1.0, sequence_ic(m, one, o, 3)), std::invalid_argument);
}

TEST(FlowTraining, DegenerateDataCollapsesSamples) {
  FlowConfig c = tiny_config(2);
  c.steps = 1500;
  c.batch = 32;
  c.velocity_hidden = 32;
  auto m = FlowModel::create(c, 12);
  const Tensor zeros({64, 1, 2}, 0.0);
  train_flow(m, zeros, 12);
  Rng rng(13);
  const RowMatrix x1 = random_matrix(200, 2, rng);
  const ConditionalField f(m, RowMatrix::Zero(200, Eigen::Index(c.context_hidden)));
  const RowMatrix x0 = ode_integrate(f, x1, 1.0, 0.0, 100);
  EXPECT_LT(x0.cwiseAbs().mean(), 0.1);
}

TEST(FlowTraining, IdentityChainMakesContinuationsPredictable) {
  synth::MarkovMelodySpec spec;
  spec.transition = RowMatrix::Identity(8, 8);
  spec.seq_len = 12;
  Rng data(14);
  const auto train = synth::gen_melody_latents(spec, 256, data);
  const auto eval = synth::gen_melody_latents(spec, 16, data);

  FlowConfig c;
  c.steps = 1500;
  c.lr = 1e-3;
  c.warmup = 100;
  c.batch = 16;
  c.context_hidden = 32;
  c.velocity_hidden = 64;
  const auto untrained = FlowModel::create(c, 15);
  auto trained = untrained;
  train_flow(trained, train.latents, 15);

  IcOptions o;
  o.ode_steps = 20;
  o.t_level = 0.3;
  const RowMatrix before = sequence_ic(untrained, eval.latents, o, 16);
  const RowMatrix after = sequence_ic(trained, eval.latents, o, 16);
  const Eigen::Index L = after.cols();
  const double cont_after = after.rightCols(L - 1).mean();
  const double cont_before = before.rightCols(L - 1).mean();
  const double first_after = after.col(0).mean();
  EXPECT_LT(cont_after, cont_before - 2.0);
  EXPECT_LT(cont_after, first_after - 1.0);
  // Continuation frames look alike: their per-frame means barely move.
  const Eigen::RowVectorXd per_frame = after.rightCols(L - 1).colwise().mean();
  EXPECT_LT(per_frame.maxCoeff() - per_frame.minCoeff(), 0.5 * (cont_before - cont_after));
}

TEST(FlowTraining, DeterministicGivenSeed) {
  FlowConfig c = tiny_config();
  c.steps = 20;
  Rng rng(17);
  const Tensor data = random_sequences(8, 4, c.latent_dim, rng);
  auto a = FlowModel::create(c, 1), b = FlowModel::create(c, 1);
  const auto la = train_flow(a, data, 2), lb = train_flow(b, data, 2);
  EXPECT_EQ(la.step_loss, lb.step_loss);
  EXPECT_EQ(a.params, b.params);
}

}  // namespace
}  // namespace pald::flow
