#pragma once

#include "divflow/errors.hpp"
#include "divflow/graph.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>

namespace divflow {

class CirculationProjector;

template <typename Scalar>
struct Jet {
  Scalar value;
  Scalar d1;
  Scalar d2;
};

/// phi(x) = -log(1 - x) - x on x < 1.
template <typename Scalar>
Scalar phi(Scalar x) {
  using std::abs;
  using std::log1p;
  if (!(x < Scalar(1))) throw DomainError("phi is defined only for x < 1");
  if (abs(x) <= Scalar(0.25)) {
    // Direct evaluation cancels x against log1p(-x); sum the series instead.
    Scalar term = x * x;
    Scalar sum = Scalar(0);
    for (int k = 2; k < 200; ++k) {
      const Scalar next = term / Scalar(k);
      sum += next;
      if (abs(next) <= std::numeric_limits<Scalar>::epsilon() * abs(sum) / Scalar(4)) break;
      term *= x;
    }
    return sum;
  }
  return -log1p(-x) - x;
}

template <typename Scalar>
Scalar phi_d1(Scalar x) {
  if (!(x < Scalar(1))) throw DomainError("phi' is defined only for x < 1");
  return x / (Scalar(1) - x);
}

template <typename Scalar>
Scalar phi_d2(Scalar x) {
  if (!(x < Scalar(1))) throw DomainError("phi'' is defined only for x < 1");
  const Scalar s = Scalar(1) - x;
  return Scalar(1) / (s * s);
}

namespace detail {

template <typename Scalar>
void check_radius(Scalar eps) {
  if (!(eps > Scalar(0) && eps < Scalar(1))) throw DomainError("extension radius must lie in (0, 1)");
}

/// Second-order Taylor continuation of a jet taken at anchor.
template <typename Scalar>
Jet<Scalar> continue_quadratic(const Jet<Scalar>& at, Scalar d) {
  return {at.value + at.d1 * d + at.d2 * d * d / Scalar(2), at.d1 + at.d2 * d, at.d2};
}

}  // namespace detail

/// phi on [-eps, eps], continued quadratically outside. Convex with
/// curvature in [1/(1+eps)^2, 1/(1-eps)^2] everywhere.
template <typename Scalar>
Jet<Scalar> phitilde_jet(Scalar x, Scalar eps = Scalar(0.1)) {
  using std::abs;
  detail::check_radius(eps);
  if (abs(x) <= eps) return {phi(x), phi_d1(x), phi_d2(x)};
  const Scalar anchor = x > Scalar(0) ? eps : -eps;
  return detail::continue_quadratic(Jet<Scalar>{phi(anchor), phi_d1(anchor), phi_d2(anchor)}, x - anchor);
}

template <typename Scalar>
Scalar phitilde(Scalar x, Scalar eps = Scalar(0.1)) {
  return phitilde_jet(x, eps).value;
}

template <typename Scalar>
Scalar phitilde_d1(Scalar x, Scalar eps = Scalar(0.1)) {
  return phitilde_jet(x, eps).d1;
}

template <typename Scalar>
Scalar phitilde_d2(Scalar x, Scalar eps = Scalar(0.1)) {
  return phitilde_jet(x, eps).d2;
}

/// log(1 + x) on [-eps, eps], continued quadratically outside.
template <typename Scalar>
Jet<Scalar> log_tilde_jet(Scalar x, Scalar eps = Scalar(0.1)) {
  using std::abs;
  using std::log1p;
  detail::check_radius(eps);
  auto exact = [](Scalar y) {
    const Scalar s = Scalar(1) + y;
    return Jet<Scalar>{log1p(y), Scalar(1) / s, -Scalar(1) / (s * s)};
  };
  if (abs(x) <= eps) return exact(x);
  const Scalar anchor = x > Scalar(0) ? eps : -eps;
  return detail::continue_quadratic(exact(anchor), x - anchor);
}

template <typename Scalar>
Scalar log_tilde(Scalar x, Scalar eps = Scalar(0.1)) {
  return log_tilde_jet(x, eps).value;
}

/// ||v||_p computed as max|v| * ||v / max|v|||_p so large p cannot overflow.
template <typename Derived>
typename Derived::Scalar lp_norm(const Eigen::MatrixBase<Derived>& v, int p) {
  using Scalar = typename Derived::Scalar;
  if (p < 1) throw DomainError("norm exponent must be positive");
  if (v.size() == 0) return Scalar(0);
  const Scalar top = v.cwiseAbs().maxCoeff();
  if (top == Scalar(0)) return Scalar(0);
  return top * std::pow((v.cwiseAbs() / top).array().pow(p).sum(), Scalar(1) / Scalar(p));
}

/// Per-edge barrier weights (w+, w-).
struct Weights {
  Eigen::VectorXd up;
  Eigen::VectorXd down;

  static Weights ones(Eigen::Index m) { return {Eigen::VectorXd::Ones(m), Eigen::VectorXd::Ones(m)}; }
  Eigen::Index size() const { return up.size(); }
  double l1() const { return up.sum() + down.sum(); }
  /// Swaps (up, down) on edges whose sign is negative.
  Weights oriented(const Eigen::Ref<const Eigen::VectorXd>& sign) const;
};

/// Residual capacities c+ = u+ - f, c- = u- + f in an edge orientation given
/// by sign (+1 graph orientation, -1 reversed). Flows in this frame are
/// sign .* (graph flow).
struct ResidualCaps {
  Eigen::VectorXd up;
  Eigen::VectorXd down;
  Eigen::VectorXd sign;

  static ResidualCaps from_flow(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f);
  Eigen::Index size() const { return up.size(); }
  Eigen::VectorXd min() const { return up.cwiseMin(down); }
  /// Reorients every edge so that up <= down.
  ResidualCaps normalized() const;
  bool is_normalized() const { return (up.array() <= down.array()).all(); }
  Eigen::VectorXd to_frame(const Eigen::Ref<const Eigen::VectorXd>& f) const { return sign.cwiseProduct(f); }
};

struct ObjectiveParams {
  double epsilon = 0.1;
  int p = 4;
  double W = 1.0;

  void validate() const;
};

/// Barrier V(f) = -sum w+ log(u+ - f) + w- log(u- + f).
double barrier_value(const Graph& g, const Weights& w, const Eigen::Ref<const Eigen::VectorXd>& f);
Eigen::VectorXd barrier_gradient(const Graph& g, const Weights& w, const Eigen::Ref<const Eigen::VectorXd>& f);
/// Diagonal of the barrier Hessian.
Eigen::VectorXd barrier_hessian(const Graph& g, const Weights& w, const Eigen::Ref<const Eigen::VectorXd>& f);

struct SeparableEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::VectorXd hessian;  // diagonal
};

/// Extended divergence sum w+ phitilde(f/c+) + w- phitilde(-f/c-); f in the caps frame.
SeparableEval divergence_tilde(const Weights& w, const ResidualCaps& caps, const Eigen::Ref<const Eigen::VectorXd>& f,
                               double eps = 0.1);

/// Unextended divergence sum w+ phi(f/c+) + w- phi(-f/c-); throws outside the domain.
SeparableEval divergence_exact(const Weights& w, const ResidualCaps& caps, const Eigen::Ref<const Eigen::VectorXd>& f);

struct ValObjectives {
  /// Unextended objective; +inf (with NaN gradient) when f leaves the open domain.
  double val = 0.0;
  bool val_defined = true;
  double tval = 0.0;
  Eigen::VectorXd grad_val;
  Eigen::VectorXd grad_tval;
  /// v_e = (c+)^2 phitilde(f/c+) + c+ c- phitilde(-f/c-).
  Eigen::VectorXd v;
  double v_norm = 0.0;
};

/// Requires caps.is_normalized(); f in the caps frame.
ValObjectives val_objectives(const Weights& w, const ResidualCaps& caps, const ObjectiveParams& params,
                             const Eigen::Ref<const Eigen::VectorXd>& f);

/// ||P grad V(f)||_2 / max(1, ||grad V(f)||_2), P the projection onto circulations.
/// Zero exactly when f is on the central path for weights w.
double centrality_residual(const Graph& g, const Weights& w, const Eigen::Ref<const Eigen::VectorXd>& f, double t,
                           int a, int b, const CirculationProjector* projector = nullptr);

}  // namespace divflow
