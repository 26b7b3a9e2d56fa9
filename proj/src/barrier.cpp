#include "divflow/barrier.hpp"

#include "divflow/laplacian.hpp"

#include <algorithm>
#include <memory>

namespace divflow {

namespace {

void check_sizes(Eigen::Index m, const Weights& w, Eigen::Index f) {
  if (w.up.size() != m || w.down.size() != m || f != m) throw DimensionError("weights or flow length differs from edge count");
}

void check_sizes(const Weights& w, const ResidualCaps& caps, Eigen::Index f) {
  const Eigen::Index m = caps.size();
  if (caps.down.size() != m || caps.sign.size() != m) throw DimensionError("residual capacity vectors disagree");
  check_sizes(m, w, f);
}

}  // namespace

Weights Weights::oriented(const Eigen::Ref<const Eigen::VectorXd>& sign) const {
  if (sign.size() != size()) throw DimensionError("orientation length differs from weights");
  Weights out = *this;
  for (Eigen::Index e = 0; e < size(); ++e) {
    if (sign[e] < 0.0) std::swap(out.up[e], out.down[e]);
  }
  return out;
}

ResidualCaps ResidualCaps::from_flow(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f) {
  if (f.size() != g.m()) throw DimensionError("flow length differs from edge count");
  ResidualCaps caps{g.cap_up() - f, g.cap_down() + f, Eigen::VectorXd::Ones(g.m())};
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    if (!(caps.up[e] > 0.0) || !(caps.down[e] > 0.0)) {
      throw DomainError("flow is not strictly feasible on edge " + std::to_string(e));
    }
  }
  return caps;
}

ResidualCaps ResidualCaps::normalized() const {
  ResidualCaps out = *this;
  for (Eigen::Index e = 0; e < size(); ++e) {
    if (out.up[e] > out.down[e]) {
      std::swap(out.up[e], out.down[e]);
      out.sign[e] = -out.sign[e];
    }
  }
  return out;
}

void ObjectiveParams::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  if (p < 2 || p % 2 != 0) throw ContractError("norm exponent p must be even and at least 2");
  if (!(W >= 0.0) || !std::isfinite(W)) throw DomainError("weight budget W must be finite and non-negative");
}

double barrier_value(const Graph& g, const Weights& w, const Eigen::Ref<const Eigen::VectorXd>& f) {
  check_sizes(g.m(), w, f.size());
  const ResidualCaps caps = ResidualCaps::from_flow(g, f);
  return -(w.up.array() * caps.up.array().log() + w.down.array() * caps.down.array().log()).sum();
}

Eigen::VectorXd barrier_gradient(const Graph& g, const Weights& w, const Eigen::Ref<const Eigen::VectorXd>& f) {
  check_sizes(g.m(), w, f.size());
  const ResidualCaps caps = ResidualCaps::from_flow(g, f);
  return w.up.cwiseQuotient(caps.up) - w.down.cwiseQuotient(caps.down);
}

Eigen::VectorXd barrier_hessian(const Graph& g, const Weights& w, const Eigen::Ref<const Eigen::VectorXd>& f) {
  check_sizes(g.m(), w, f.size());
  const ResidualCaps caps = ResidualCaps::from_flow(g, f);
  return (w.up.array() / caps.up.array().square() + w.down.array() / caps.down.array().square()).matrix();
}

SeparableEval divergence_tilde(const Weights& w, const ResidualCaps& caps, const Eigen::Ref<const Eigen::VectorXd>& f,
                               double eps) {
  check_sizes(w, caps, f.size());
  SeparableEval out{0.0, Eigen::VectorXd(f.size()), Eigen::VectorXd(f.size())};
  for (Eigen::Index e = 0; e < f.size(); ++e) {
    const double cu = caps.up[e];
    const double cd = caps.down[e];
    const auto jp = phitilde_jet(f[e] / cu, eps);
    const auto jm = phitilde_jet(-f[e] / cd, eps);
    out.value += w.up[e] * jp.value + w.down[e] * jm.value;
    out.gradient[e] = w.up[e] * jp.d1 / cu - w.down[e] * jm.d1 / cd;
    out.hessian[e] = w.up[e] * jp.d2 / (cu * cu) + w.down[e] * jm.d2 / (cd * cd);
  }
  return out;
}

SeparableEval divergence_exact(const Weights& w, const ResidualCaps& caps, const Eigen::Ref<const Eigen::VectorXd>& f) {
  check_sizes(w, caps, f.size());
  SeparableEval out{0.0, Eigen::VectorXd(f.size()), Eigen::VectorXd(f.size())};
  for (Eigen::Index e = 0; e < f.size(); ++e) {
    const double cu = caps.up[e];
    const double cd = caps.down[e];
    const double xp = f[e] / cu;
    const double xm = -f[e] / cd;
    out.value += w.up[e] * phi(xp) + w.down[e] * phi(xm);
    out.gradient[e] = w.up[e] * phi_d1(xp) / cu - w.down[e] * phi_d1(xm) / cd;
    out.hessian[e] = w.up[e] * phi_d2(xp) / (cu * cu) + w.down[e] * phi_d2(xm) / (cd * cd);
  }
  return out;
}

ValObjectives val_objectives(const Weights& w, const ResidualCaps& caps, const ObjectiveParams& params,
                             const Eigen::Ref<const Eigen::VectorXd>& f) {
  params.validate();
  check_sizes(w, caps, f.size());
  if (!caps.is_normalized()) throw ContractError("residual capacities must satisfy c+ <= c- on every edge");
  const Eigen::Index m = f.size();
  const double eps = params.epsilon;
  const int p = params.p;

  ValObjectives out;
  out.grad_tval.resize(m);
  out.grad_val.resize(m);
  out.v.resize(m);
  Eigen::VectorXd v_exact(m);
  Eigen::VectorXd dv_tilde(m);
  Eigen::VectorXd dv_exact(m);
  constexpr double kGuard = 1.0 - 1e-12;
  double d_tilde = 0.0;
  double d_exact = 0.0;
  for (Eigen::Index e = 0; e < m; ++e) {
    const double cu = caps.up[e];
    const double cd = caps.down[e];
    const double xp = f[e] / cu;
    const double xm = -f[e] / cd;
    const auto jp = phitilde_jet(xp, eps);
    const auto jm = phitilde_jet(xm, eps);
    d_tilde += w.up[e] * jp.value + w.down[e] * jm.value;
    out.grad_tval[e] = w.up[e] * jp.d1 / cu - w.down[e] * jm.d1 / cd;
    out.v[e] = cu * cu * jp.value + cu * cd * jm.value;
    dv_tilde[e] = cu * (jp.d1 - jm.d1);
    if (out.val_defined && xp < kGuard && xm < kGuard) {
      d_exact += w.up[e] * phi(xp) + w.down[e] * phi(xm);
      out.grad_val[e] = w.up[e] * phi_d1(xp) / cu - w.down[e] * phi_d1(xm) / cd;
      v_exact[e] = cu * cu * phi(xp) + cu * cd * phi(xm);
      dv_exact[e] = cu * (phi_d1(xp) - phi_d1(xm));
    } else {
      out.val_defined = false;
    }
  }

  auto add_norm_term = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& dv, Eigen::VectorXd& grad) {
    const double norm = lp_norm(v, p);
    if (norm > 0.0) grad += params.W * ((v / norm).array().pow(p - 1) * dv.array()).matrix();
    return norm;
  };
  out.v_norm = add_norm_term(out.v, dv_tilde, out.grad_tval);
  out.tval = d_tilde + params.W * out.v_norm;
  if (out.val_defined) {
    out.val = d_exact + params.W * add_norm_term(v_exact, dv_exact, out.grad_val);
  } else {
    out.val = std::numeric_limits<double>::infinity();
    out.grad_val.setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

double centrality_residual(const Graph& g, const Weights& w, const Eigen::Ref<const Eigen::VectorXd>& f, double t,
                           int a, int b, const CirculationProjector* projector) {
  const DemandVector target = t * unit_demand(g, a, b);
  const DemandVector actual = apply_incidence_transpose(g, f);
  if ((actual - target).lpNorm<Eigen::Infinity>() > 1e-6 * (1.0 + std::abs(t))) {
    throw DomainError("flow does not route t units from a to b");
  }
  const Eigen::VectorXd grad = barrier_gradient(g, w, f);
  std::unique_ptr<CirculationProjector> own;
  if (projector == nullptr) {
    own = std::make_unique<CirculationProjector>(g);
    projector = own.get();
  }
  return projector->project(grad).norm() / std::max(1.0, grad.norm());
}

}  // namespace divflow
