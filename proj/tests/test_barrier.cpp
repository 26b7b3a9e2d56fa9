#include "divflow/barrier.hpp"
#include "divflow/errors.hpp"
#include "divflow/laplacian.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace divflow {
namespace {

TEST(Phi, FrozenValues) {
  EXPECT_NEAR(phi(0.5), 0.1931471806, 1e-10);
  EXPECT_NEAR(phi(-1.0), 0.3068528194, 1e-10);
  EXPECT_DOUBLE_EQ(phi(0.0), 0.0);
  EXPECT_THROW(phi(1.0), DomainError);
  EXPECT_THROW(phi_d1(1.5), DomainError);
}

TEST(Phi, SeriesBranchMatchesLongDoubleSeries) {
  for (double x : {-0.25, -0.1, -1e-3, 1e-6, 1e-3, 0.1, 0.2, 0.25}) {
    // sum_{k>=2} x^k / k, summed smallest term first.
    long double ref = 0.0L;
    for (int k = 120; k >= 2; --k) ref += std::pow(static_cast<long double>(x), k) / k;
    EXPECT_NEAR(phi(x), static_cast<double>(ref), 4e-16 * std::abs(static_cast<double>(ref)));
  }
  // Tiny arguments keep full relative accuracy: phi(x) ~ x^2 / 2.
  EXPECT_NEAR(phi(1e-8) / 5e-17, 1.0, 1e-7);
}

TEST(Phi, DerivativesMatchFiniteDifferences) {
  for (double x : {-2.0, -0.5, 0.0, 0.3, 0.7}) {
    const double h = 1e-5;
    EXPECT_NEAR(phi_d1(x), (phi(x + h) - phi(x - h)) / (2 * h), 1e-7);
    EXPECT_NEAR(phi_d2(x), (phi_d1(x + h) - phi_d1(x - h)) / (2 * h), 1e-6);
  }
}

TEST(PhiTilde, FrozenValues) {
  EXPECT_NEAR(phitilde(0.2), 0.0226444663, 1e-10);
  EXPECT_DOUBLE_EQ(phitilde(0.05), phi(0.05));
  EXPECT_DOUBLE_EQ(phitilde(-0.1), phi(-0.1));
}

TEST(PhiTilde, IsTwiceDifferentiableAcrossTheSeam) {
  const double eps = 0.1;
  for (double seam : {eps, -eps}) {
    const auto in = phitilde_jet(seam - std::copysign(1e-12, seam), eps);
    const auto out = phitilde_jet(seam + std::copysign(1e-12, seam), eps);
    EXPECT_NEAR(in.value, out.value, 1e-12);
    EXPECT_NEAR(in.d1, out.d1, 1e-10);
    EXPECT_NEAR(in.d2, out.d2, 1e-9);
  }
}

TEST(PhiTilde, CurvatureStaysInBand) {
  for (double eps : {0.05, 0.1, 0.3}) {
    const double lo = 1.0 / ((1 + eps) * (1 + eps));
    const double hi = 1.0 / ((1 - eps) * (1 - eps));
    for (double x = -50.0; x <= 50.0; x += 0.37) {
      const double k = phitilde_d2(x, eps);
      EXPECT_GE(k, lo - 1e-12);
      EXPECT_LE(k, hi + 1e-12);
    }
  }
  EXPECT_THROW(phitilde(0.5, 0.0), DomainError);
  EXPECT_THROW(phitilde(0.5, 1.0), DomainError);
}

TEST(LogTilde, FrozenValueAndSeam) {
  EXPECT_NEAR(log_tilde(0.3, 0.1), 0.2605994360, 1e-9);
  EXPECT_DOUBLE_EQ(log_tilde(0.05), std::log1p(0.05));
  const auto a = log_tilde_jet(-0.1 - 1e-12);
  const auto b = log_tilde_jet(-0.1 + 1e-12);
  EXPECT_NEAR(a.value, b.value, 3e-12);
  EXPECT_NEAR(a.d1, b.d1, 1e-10);
}

TEST(LpNorm, HandlesExtremeMagnitudes) {
  Eigen::VectorXd v(3);
  v << 3.0, -4.0, 0.0;
  EXPECT_NEAR(lp_norm(v, 2), 5.0, 1e-14);
  v *= 1e200;
  EXPECT_NEAR(lp_norm(v, 32) / 4e200, std::pow(1.0 + std::pow(0.75, 32), 1.0 / 32), 1e-14);
  EXPECT_DOUBLE_EQ(lp_norm(Eigen::VectorXd::Zero(4), 4), 0.0);
}

Graph two_path_graph() {
  // Two disjoint 0-3 paths; the circulation space is one cycle.
  const Eigen::VectorXd cap = Eigen::Vector4d(3, 5, 2, 4);
  return Graph(4, {{0, 1}, {1, 3}, {0, 2}, {2, 3}}, cap, cap);
}

TEST(Barrier, GradientAndHessianMatchFiniteDifferences) {
  const Graph g = two_path_graph();
  Weights w = Weights::ones(4);
  w.up[1] = 2.5;
  w.down[2] = 0.5;
  const Eigen::Vector4d f(1.0, -2.0, 0.5, 3.0);
  const Eigen::VectorXd grad = barrier_gradient(g, w, f);
  const Eigen::VectorXd hess = barrier_hessian(g, w, f);
  for (int e = 0; e < 4; ++e) {
    const double h = 1e-6;
    Eigen::VectorXd fp = f;
    Eigen::VectorXd fm = f;
    fp[e] += h;
    fm[e] -= h;
    EXPECT_NEAR(grad[e], (barrier_value(g, w, fp) - barrier_value(g, w, fm)) / (2 * h), 1e-6);
    EXPECT_NEAR(hess[e], (barrier_gradient(g, w, fp)[e] - barrier_gradient(g, w, fm)[e]) / (2 * h), 1e-5);
  }
  EXPECT_THROW(barrier_value(g, w, Eigen::Vector4d(3.0, 0, 0, 0)), DomainError);
}

TEST(ResidualCaps, NormalizationFlipsLargerSide) {
  const Graph g = two_path_graph();
  const Eigen::Vector4d f(1.0, -2.0, 0.0, 3.5);
  const ResidualCaps caps = ResidualCaps::from_flow(g, f);
  const ResidualCaps norm = caps.normalized();
  EXPECT_TRUE(norm.is_normalized());
  EXPECT_EQ(norm.sign, Eigen::Vector4d(1, -1, 1, 1));
  EXPECT_DOUBLE_EQ(norm.up[1], 3.0);
  EXPECT_DOUBLE_EQ(norm.down[1], 7.0);
  EXPECT_EQ(norm.min(), caps.min());
}

TEST(Divergence, ZeroAtOriginAndGradientMatches) {
  std::mt19937_64 rng(17);
  ResidualCaps caps{Eigen::VectorXd(5), Eigen::VectorXd(5), Eigen::VectorXd::Ones(5)};
  Weights w{Eigen::VectorXd(5), Eigen::VectorXd(5)};
  for (int e = 0; e < 5; ++e) {
    caps.up[e] = testing::uniform(rng, 0.5, 3);
    caps.down[e] = testing::uniform(rng, 0.5, 3);
    w.up[e] = testing::uniform(rng, 0.5, 2);
    w.down[e] = testing::uniform(rng, 0.5, 2);
  }
  EXPECT_DOUBLE_EQ(divergence_tilde(w, caps, Eigen::VectorXd::Zero(5)).value, 0.0);
  Eigen::VectorXd f(5);
  for (auto& x : f) x = testing::uniform(rng, -0.4, 0.4);
  const SeparableEval t = divergence_tilde(w, caps, f);
  const SeparableEval x = divergence_exact(w, caps, f);
  EXPECT_GT(x.value, 0.0);
  for (int e = 0; e < 5; ++e) {
    const double h = 1e-6;
    Eigen::VectorXd fp = f;
    Eigen::VectorXd fm = f;
    fp[e] += h;
    fm[e] -= h;
    EXPECT_NEAR(t.gradient[e], (divergence_tilde(w, caps, fp).value - divergence_tilde(w, caps, fm).value) / (2 * h),
                1e-6);
    EXPECT_NEAR(x.gradient[e], (divergence_exact(w, caps, fp).value - divergence_exact(w, caps, fm).value) / (2 * h),
                1e-6);
  }
}

TEST(Divergence, ExactMatchesBregmanOfBarrier) {
  // Divergence of V between f0 and f0 + d equals V(f0 + d) - V(f0) - <grad V(f0), d>.
  const Graph g = two_path_graph();
  const Weights w{Eigen::Vector4d(1, 2, 0.5, 1), Eigen::Vector4d(1.5, 1, 1, 3)};
  const Eigen::Vector4d f0(0.5, 1.0, -0.5, -1.0);
  const Eigen::Vector4d d(0.8, -1.2, 0.3, 2.0);
  const ResidualCaps caps = ResidualCaps::from_flow(g, f0);
  const double bregman =
      barrier_value(g, w, f0 + d) - barrier_value(g, w, f0) - barrier_gradient(g, w, f0).dot(d);
  EXPECT_NEAR(divergence_exact(w, caps, d).value, bregman, 1e-12);
}

TEST(ValObjectives, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(23);
  const Eigen::Index m = 6;
  ResidualCaps caps{Eigen::VectorXd(m), Eigen::VectorXd(m), Eigen::VectorXd::Ones(m)};
  Weights w{Eigen::VectorXd(m), Eigen::VectorXd(m)};
  for (Eigen::Index e = 0; e < m; ++e) {
    caps.up[e] = testing::uniform(rng, 0.5, 2);
    caps.down[e] = caps.up[e] + testing::uniform(rng, 0, 2);
    w.up[e] = testing::uniform(rng, 0.5, 2);
    w.down[e] = testing::uniform(rng, 0.5, 2);
  }
  const ObjectiveParams params{0.1, 4, 3.0};
  Eigen::VectorXd f(m);
  for (auto& x : f) x = testing::uniform(rng, -0.3, 0.3);
  const ValObjectives obj = val_objectives(w, caps, params, f);
  ASSERT_TRUE(obj.val_defined);
  for (Eigen::Index e = 0; e < m; ++e) {
    const double h = 1e-6;
    Eigen::VectorXd fp = f;
    Eigen::VectorXd fm = f;
    fp[e] += h;
    fm[e] -= h;
    const ValObjectives op = val_objectives(w, caps, params, fp);
    const ValObjectives om = val_objectives(w, caps, params, fm);
    EXPECT_NEAR(obj.grad_tval[e], (op.tval - om.tval) / (2 * h), 1e-6);
    EXPECT_NEAR(obj.grad_val[e], (op.val - om.val) / (2 * h), 1e-6);
  }
  // v is an independent per-edge evaluation.
  for (Eigen::Index e = 0; e < m; ++e) {
    const double cu = caps.up[e];
    const double cd = caps.down[e];
    EXPECT_NEAR(obj.v[e], cu * cu * phitilde(f[e] / cu) + cu * cd * phitilde(-f[e] / cd), 1e-14);
  }
  EXPECT_NEAR(obj.tval - params.W * obj.v_norm, divergence_tilde(w, caps, f).value, 1e-12);
}

TEST(ValObjectives, UndefinedOutsideDomainAndContracts) {
  const ResidualCaps caps{Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 3), Eigen::Vector2d::Ones()};
  const Weights w = Weights::ones(2);
  const ValObjectives out = val_objectives(w, caps, {}, Eigen::Vector2d(1.5, 0));
  EXPECT_FALSE(out.val_defined);
  EXPECT_TRUE(std::isinf(out.val));
  EXPECT_TRUE(std::isfinite(out.tval));
  const ResidualCaps flipped{Eigen::Vector2d(3, 1), Eigen::Vector2d(2, 3), Eigen::Vector2d::Ones()};
  EXPECT_THROW(val_objectives(w, flipped, {}, Eigen::Vector2d::Zero()), ContractError);
  EXPECT_THROW(val_objectives(w, caps, {0.1, 3, 1.0}, Eigen::Vector2d::Zero()), ContractError);
}

TEST(Centrality, ZeroOnSymmetricFlowAndPositiveOffPath) {
  // Two identical parallel paths: splitting t evenly is central for unit weights.
  const Eigen::VectorXd cap = Eigen::VectorXd::Constant(4, 4.0);
  const Graph g(4, {{0, 1}, {1, 3}, {0, 2}, {2, 3}}, cap, cap);
  const Weights w = Weights::ones(4);
  EXPECT_NEAR(centrality_residual(g, w, Eigen::Vector4d(1, 1, 1, 1), 2.0, 0, 3), 0.0, 1e-12);
  EXPECT_GT(centrality_residual(g, w, Eigen::Vector4d(1.5, 1.5, 0.5, 0.5), 2.0, 0, 3), 1e-3);
  EXPECT_THROW(centrality_residual(g, w, Eigen::Vector4d(1, 1, 1, 1), 3.0, 0, 3), DomainError);
}

}  // namespace
}  // namespace divflow
