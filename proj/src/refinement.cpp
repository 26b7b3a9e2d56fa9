#include "divflow/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace divflow {

namespace {

long double ipow(long double x, int k) {
  long double out = 1.0L;
  for (int i = 0; i < k; ++i) out *= x;
  return out;
}

void check_even(int p) {
  if (p < 2 || p % 2 != 0) throw ContractError("exponent must be an even integer >= 2");
}

constexpr double kArmijo = 1e-4;

}  // namespace

// ---------------------------------------------------------------------------
// Sandwich inequalities

bool Sandwich::holds(long double rel_slack) const {
  const long double scale = std::max({std::abs(lower), std::abs(middle), std::abs(upper), 1e-300L});
  return lower <= middle + rel_slack * scale && middle <= upper + rel_slack * scale;
}

Sandwich power_increment_bounds(int p, double x, double delta) {
  check_even(p);
  const long double lx = x;
  const long double ld = delta;
  // Binomial tail sum_{k>=2} C(p,k) x^{p-k} d^k avoids cancelling (x+d)^p against x^p.
  long double middle = 0.0L;
  long double binom = 1.0L;
  for (int k = 1; k <= p; ++k) {
    binom = binom * static_cast<long double>(p - k + 1) / static_cast<long double>(k);
    if (k >= 2) middle += binom * ipow(lx, p - k) * ipow(ld, k);
  }
  const long double base = ipow(lx, p - 2) * ld * ld + ipow(ld, p);
  return {std::ldexp(1.0L, -p) * base, middle, static_cast<long double>(p) * std::ldexp(1.0L, p - 1) * base};
}

Sandwich quadratic_sandwich(const SeparableConvexPiece& h, double c1, double c2, double x, double delta) {
  const Jet<double> at = h.eval(x);
  const Jet<double> to = h.eval(x + delta);
  const long double middle = static_cast<long double>(to.value) - at.value - static_cast<long double>(at.d1) * delta;
  const long double d2 = static_cast<long double>(delta) * delta;
  return {c1 * d2 / 2.0L, middle, c2 * d2 / 2.0L};
}

Sandwich power_sandwich(const SeparableConvexPiece& h, double c1, double c2, int p, double x, double delta) {
  check_even(p);
  const Jet<double> at = h.eval(x);
  const Jet<double> to = h.eval(x + delta);
  const long double hx = at.value;
  const long double middle =
      ipow(to.value, p) - ipow(hx, p) - static_cast<long double>(p) * ipow(hx, p - 1) * at.d1 * delta;
  const long double base = ipow(x, 2 * p - 2) * delta * delta + ipow(delta, 2 * p);
  const long double lower = ipow(c1, 3 * p) / ipow(8.0L * c2, 2 * p) * base;
  const long double upper = ipow(16.0L * c2, p) * base;
  return {lower, middle, upper};
}

// ---------------------------------------------------------------------------
// Piece families

PieceList::PieceList(std::vector<SeparableConvexPiece> pieces, PieceKind kind)
    : pieces_(std::move(pieces)), kind_(kind), curvature_(static_cast<Eigen::Index>(pieces_.size())) {
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].kind != kind_) throw ContractError("piece kind differs from family kind");
    curvature_[static_cast<Eigen::Index>(i)] = pieces_[i].curvature;
  }
}

void PieceList::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd* value, Eigen::VectorXd* d1,
                         Eigen::VectorXd* d2) const {
  if (x.size() != size()) throw DimensionError("piece family evaluated at a vector of the wrong length");
  if (value) value->resize(size());
  if (d1) d1->resize(size());
  if (d2) d2->resize(size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    const Jet<double> j = pieces_[static_cast<std::size_t>(i)].eval(x[i]);
    if (value) (*value)[i] = j.value;
    if (d1) (*d1)[i] = j.d1;
    if (d2) (*d2)[i] = j.d2;
  }
}

QuadraticFamily::QuadraticFamily(Eigen::VectorXd curvature, Eigen::VectorXd linear)
    : curvature_(std::move(curvature)), linear_(std::move(linear)) {
  if (curvature_.size() != linear_.size()) throw DimensionError("quadratic family coefficient lengths differ");
  if ((curvature_.array() < 0.0).any()) throw DomainError("quadratic family needs non-negative curvature");
}

void QuadraticFamily::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd* value, Eigen::VectorXd* d1,
                               Eigen::VectorXd* d2) const {
  if (x.size() != size()) throw DimensionError("piece family evaluated at a vector of the wrong length");
  if (value) *value = (linear_.array() * x.array() + 0.5 * curvature_.array() * x.array().square()).matrix();
  if (d1) *d1 = linear_ + curvature_.cwiseProduct(x);
  if (d2) *d2 = curvature_;
}

RegularizedFamily::RegularizedFamily(std::shared_ptr<const PieceFamily> base, double nu)
    : base_(std::move(base)), nu_(nu), curvature_(base_->curvature().array() + 2.0 * nu) {}

void RegularizedFamily::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd* value,
                                 Eigen::VectorXd* d1, Eigen::VectorXd* d2) const {
  base_->evaluate(x, value, d1, d2);
  if (value) *value += nu_ * x.cwiseAbs2();
  if (d1) *d1 += 2.0 * nu_ * x;
  if (d2) d2->array() += 2.0 * nu_;
}

// ---------------------------------------------------------------------------
// Smoothed instance and its oracle

void SmoothedInstance::validate(Eigen::Index m) const {
  if (g.size() != m || r.size() != m || b.size() != m) throw DimensionError("smoothed instance length differs from edge count");
  if (p < 1) throw DomainError("smoothed instance exponent must be positive");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::isfinite(g[i]) || !(r[i] >= 0.0) || !(b[i] >= 0.0) || !std::isfinite(r[i]) || !std::isfinite(b[i])) {
      throw DomainError("smoothed instance coefficients must be finite with r, b >= 0");
    }
    if (r[i] == 0.0 && b[i] == 0.0) throw DomainError("edge " + std::to_string(i) + " has no curvature");
  }
}

double SmoothedInstance::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::ArrayXd t = b.array() * x.array().square();
  return g.dot(x) + (r.array() * x.array().square()).sum() + t.pow(p).sum();
}

Eigen::VectorXd SmoothedInstance::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::ArrayXd t = b.array() * x.array().square();
  return (g.array() + 2.0 * r.array() * x.array() + 2.0 * p * t.pow(p - 1) * b.array() * x.array()).matrix();
}

Eigen::VectorXd SmoothedInstance::hessian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::ArrayXd t = b.array() * x.array().square();
  return (2.0 * r.array() + 2.0 * p * (2.0 * p - 1.0) * t.pow(p - 1) * b.array()).matrix();
}

namespace {

// Newton direction for min grad^T s + s^T H s / 2 over circulations.
FlowVector newton_direction(FlowSpace& space, const Eigen::VectorXd& grad, Eigen::VectorXd hess, int* solves) {
  const double top = hess.maxCoeff();
  const double floor = std::max(top * 1e-14, std::numeric_limits<double>::min() * 1e10);
  hess = hess.cwiseMax(floor);
  LaplacianSolver& solver = space.weighted();
  solver.factorize(hess);
  const Eigen::VectorXd scaled = grad.cwiseQuotient(hess);
  PotentialVector y;
  solver.solve(solver.net_inflow(scaled), y, 1e-9);
  ++*solves;
  return -(grad - solver.potential_differences(y)).cwiseQuotient(hess);
}

}  // namespace

FlowVector oracle_2p(FlowSpace& space, const SmoothedInstance& instance, double tol, OracleReport* report,
                     const OracleOptions& options) {
  const Eigen::Index m = space.edge_count();
  instance.validate(m);
  if (!(tol > 0.0)) throw DomainError("oracle tolerance must be positive");
  OracleReport rep;
  FlowVector x = FlowVector::Zero(m);
  double value = 0.0;
  const bool quadratic = (instance.b.array() == 0.0).all();

  for (rep.iterations = 0; rep.iterations < options.max_iterations; ++rep.iterations) {
    const Eigen::VectorXd grad = instance.gradient(x);
    const FlowVector step = newton_direction(space, grad, instance.hessian(x), &rep.linear_solves);
    const double decrement = -grad.dot(step);
    rep.gap_estimate = std::max(0.0, decrement / 2.0);
    const double threshold = std::max(tol, options.relative_tol * std::abs(value));
    if (rep.gap_estimate <= threshold && rep.iterations > 0) break;
    if (decrement <= 0.0) break;

    double alpha = 1.0;
    double next = instance.value(x + step);
    int halvings = 0;
    // A nearly flat start can give steps many decades too long, so allow deep backtracking.
    while (!(next <= value - kArmijo * alpha * decrement) && halvings < 1100) {
      alpha /= 2.0;
      next = instance.value(x + alpha * step);
      ++halvings;
    }
    if (!(next <= value)) {
      // No representable decrease remains; accept if the gap is at rounding level.
      if (rep.gap_estimate <= std::max(threshold, 1e-13 * (1.0 + std::abs(value)))) break;
      throw ConvergenceError("oracle line search failed", rep.gap_estimate);
    }
    x += alpha * step;
    value = next;
    if (quadratic && alpha == 1.0) {
      ++rep.iterations;
      rep.gap_estimate = 0.0;
      break;
    }
  }
  if (rep.iterations >= options.max_iterations) {
    throw ConvergenceError("oracle iteration cap reached", rep.gap_estimate);
  }
  // Ill-conditioned Hessians let rounding leak into B^T x; project it back out.
  x = space.projector().repair(x, DemandVector::Zero(space.vertex_count()));
  rep.demand_residual = space.net_inflow(x).lpNorm<1>() / (1.0 + x.lpNorm<1>());
  if (report) *report = rep;
  return x;
}

FlowVector oracle_2p(const Graph& g, const SmoothedInstance& instance, double tol, OracleReport* report) {
  FlowSpace space(g);
  return oracle_2p(space, instance, tol, report);
}

// ---------------------------------------------------------------------------
// Refinement problem

void RefinementProblem::validate() const {
  if (!space || !q || !h) throw ContractError("refinement problem is missing its graph or pieces");
  const Eigen::Index m = space->edge_count();
  if (q->size() != m || h->size() != m) throw DimensionError("piece families must have one piece per edge");
  if (demand.size() != space->vertex_count()) throw DimensionError("demand length differs from vertex count");
  if (q->kind() != PieceKind::kQuadratic || h->kind() != PieceKind::kPower) {
    throw ContractError("q must be quadratic-like and h power-base");
  }
  check_even(p);
  if (!(W >= 0.0) || !std::isfinite(W)) throw DomainError("W must be finite and non-negative");
  if ((q->curvature().array() < 0.0).any() || (h->curvature().array() < 0.0).any()) {
    throw DomainError("curvature scales must be non-negative");
  }
}

double RefinementProblem::p_power_value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd qv;
  Eigen::VectorXd hv;
  q->evaluate(x, &qv, nullptr, nullptr);
  h->evaluate(x, &hv, nullptr, nullptr);
  return qv.sum() + W * hv.array().pow(p).sum();
}

double RefinementProblem::norm_value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd qv;
  Eigen::VectorXd hv;
  q->evaluate(x, &qv, nullptr, nullptr);
  h->evaluate(x, &hv, nullptr, nullptr);
  return qv.sum() + lp_norm(hv, p);
}

Eigen::VectorXd RefinementProblem::norm_gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd dq;
  Eigen::VectorXd hv;
  Eigen::VectorXd dh;
  q->evaluate(x, nullptr, &dq, nullptr);
  h->evaluate(x, &hv, &dh, nullptr);
  const double norm = lp_norm(hv, p);
  if (norm > 0.0) dq += ((hv / norm).array().pow(p - 1) * dh.array()).matrix();
  return dq;
}

namespace {

struct PowerEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd hess;
};

PowerEval evaluate_p_power(const RefinementProblem& problem, const Eigen::VectorXd& x, bool want_hessian) {
  Eigen::VectorXd qv, dq, d2q, hv, dh, d2h;
  problem.q->evaluate(x, &qv, &dq, want_hessian ? &d2q : nullptr);
  problem.h->evaluate(x, &hv, &dh, want_hessian ? &d2h : nullptr);
  const int p = problem.p;
  const Eigen::ArrayXd hp1 = hv.array().pow(p - 1);
  PowerEval out;
  out.value = qv.sum() + problem.W * (hp1 * hv.array()).sum();
  out.grad = dq + (problem.W * p * hp1 * dh.array()).matrix();
  if (want_hessian) {
    out.hess = d2q + (problem.W * p *
                      ((p - 1) * hv.array().pow(p - 2) * dh.array().square() + hp1 * d2h.array()))
                         .matrix();
  }
  return out;
}

}  // namespace

FlowVector reduce_to_2p(const RefinementProblem& problem, double tol, const RefinementOptions& options,
                        RefinementReport* report) {
  problem.validate();
  if (!(tol > 0.0)) throw DomainError("refinement tolerance must be positive");
  FlowSpace& space = *problem.space;
  const int p = problem.p;
  const double floor_step = std::ldexp(1.0, -22 * p);
  const double model_scale = std::ldexp(1.0, -16 * p);
  const double base_scale = std::ldexp(1.0, -16);
  const double w_root = std::pow(problem.W, 1.0 / p);

  RefinementReport rep;
  FlowVector x;
  if (options.warm_start != nullptr) {
    x = *options.warm_start;
    if (x.size() != space.edge_count()) throw DimensionError("warm start length differs from edge count");
  } else {
    space.weighted().check_demand(problem.demand);
    x = space.projector().min_norm_flow(problem.demand);
  }
  PowerEval cur = evaluate_p_power(problem, x, options.newton_polish);
  if (options.value_trace) options.value_trace->push_back(cur.value);
  const Eigen::VectorXd& a = problem.q->curvature();
  const Eigen::VectorXd& b = problem.h->curvature();

  for (rep.sweeps = 0; rep.sweeps < options.max_sweeps;) {
    const double start_value = cur.value;
    double model_gap = 0.0;

    // Refinement step on the smoothed model of the p-power objective. Without a
    // power term the model is a rescaled Newton model, which the polish covers.
    const bool has_power = problem.W > 0.0 && (b.array() > 0.0).any();
    if (has_power || !options.newton_polish) {
      SmoothedInstance model;
      model.g = cur.grad;
      model.r = model_scale * (a.array() + problem.W * b.array().pow(p) * x.array().pow(2 * p - 2)).matrix();
      model.b = (base_scale * w_root) * b;
      model.p = p;
      if ((model.r.array() == 0.0 && model.b.array() == 0.0).any()) {
        throw ContractError("refinement needs positive curvature on every edge");
      }
      OracleReport orep;
      OracleOptions oopt;
      oopt.relative_tol = 1e-6;
      const FlowVector direction = oracle_2p(space, model, std::numeric_limits<double>::min(), &orep, oopt);
      ++rep.oracle_calls;
      rep.linear_solves += orep.linear_solves;
      const double slope = cur.grad.dot(direction);
      if (slope < 0.0) {
        double alpha = options.line_search ? 1.0 : floor_step;
        if (options.line_search && options.newton_polish) {
          // The model is scaled down by 2^{-16p}, so its direction overshoots by
          // decades; start backtracking at the local quadratic minimizer instead.
          const double curvature = direction.cwiseAbs2().dot(cur.hess);
          if (curvature > 0.0) alpha = std::clamp(-slope / curvature, floor_step, 1.0);
        }
        FlowVector trial = x + alpha * direction;
        PowerEval next = evaluate_p_power(problem, trial, options.newton_polish);
        while (options.line_search && !(next.value <= cur.value + kArmijo * alpha * slope) && alpha > floor_step) {
          alpha = std::max(alpha / 2.0, floor_step);
          trial = x + alpha * direction;
          next = evaluate_p_power(problem, trial, options.newton_polish);
        }
        if (next.value <= cur.value || !options.line_search) {
          x = std::move(trial);
          cur = std::move(next);
        }
        model_gap = -slope;
      }
    }

    // Newton polish: the same oracle with the true curvature and no power term.
    if (options.newton_polish) {
      SmoothedInstance newton{cur.grad, cur.hess / 2.0, Eigen::VectorXd::Zero(x.size()), p};
      newton.r = newton.r.cwiseMax(1e-300);
      OracleReport nrep;
      const FlowVector step = oracle_2p(space, newton, std::numeric_limits<double>::min(), &nrep);
      ++rep.oracle_calls;
      rep.linear_solves += nrep.linear_solves;
      const double nslope = cur.grad.dot(step);
      model_gap = std::max(0.0, -nslope / 2.0);
      if (nslope < 0.0) {
        double alpha = 1.0;
        FlowVector trial = x + step;
        PowerEval next = evaluate_p_power(problem, trial, true);
        while (!(next.value <= cur.value + kArmijo * alpha * nslope) && alpha > 1e-12) {
          alpha /= 2.0;
          trial = x + alpha * step;
          next = evaluate_p_power(problem, trial, true);
        }
        if (next.value <= cur.value) {
          x = std::move(trial);
          cur = std::move(next);
        }
      }
    }

    const DemandVector drift = space.net_inflow(x) - problem.demand;
    if (drift.lpNorm<1>() > 1e-13 * (1.0 + x.lpNorm<1>())) {
      x = space.projector().repair(x, problem.demand);
      cur = evaluate_p_power(problem, x, options.newton_polish);
    }

    ++rep.sweeps;
    rep.last_decrease = start_value - cur.value;
    if (options.value_trace) options.value_trace->push_back(cur.value);
    if (!options.line_search) {
      if (rep.sweeps >= options.max_sweeps) break;
      continue;
    }
    if (rep.last_decrease < tol / 10.0) {
      const double rounding = 1e-13 * (1.0 + std::abs(cur.value));
      if (model_gap > std::max(tol, rounding) && rep.last_decrease <= 0.0) {
        throw StallError("refinement stalled with estimated gap " + std::to_string(model_gap));
      }
      break;
    }
  }
  if (options.line_search && rep.sweeps >= options.max_sweeps && rep.last_decrease >= tol / 10.0) {
    throw ConvergenceError("refinement sweep cap reached", rep.last_decrease);
  }
  rep.value = cur.value;
  if (report) *report = rep;
  return x;
}

// ---------------------------------------------------------------------------
// Norm form

FlowVector solve_lp_norm(const RefinementProblem& problem, double tol, const LpNormOptions& options,
                         LpNormReport* report) {
  problem.validate();
  LpNormReport rep;
  RefinementProblem inner = problem;
  const double amin = problem.q->curvature().minCoeff();
  if (!(amin > 0.0)) {
    const double amax = std::max(1.0, problem.q->curvature().maxCoeff());
    inner.q = std::make_shared<RegularizedFamily>(problem.q, 1e-12 * amax);
  }
  const int p = problem.p;

  auto absorb = [&](const RefinementReport& r) {
    rep.sweeps += r.sweeps;
    rep.oracle_calls += r.oracle_calls;
    rep.linear_solves += r.linear_solves;
  };
  auto h_norm = [&](const FlowVector& x) {
    Eigen::VectorXd hv;
    inner.h->evaluate(x, &hv, nullptr, nullptr);
    return lp_norm(hv, p);
  };

  RefinementReport rr;
  inner.W = 0.0;
  FlowVector x = reduce_to_2p(inner, tol, options.inner, &rr);
  absorb(rr);
  double norm = h_norm(x);
  if (norm == 0.0) {
    rep.degenerate = true;
    if (report) *report = rep;
    return x;
  }

  // rho(s) = s - log T(e^s) with T(lambda) = ||h(x_lambda)||_p^{1-p} / p is
  // increasing in s; its root is the stationary multiplier.
  auto log_target = [&](double h) { return (1.0 - p) * std::log(h) - std::log(static_cast<double>(p)); };
  RefinementOptions inner_opts = options.inner;
  auto evaluate = [&](double s, FlowVector& xs) {
    inner.W = std::exp(s);
    inner_opts.warm_start = &x;
    RefinementReport r;
    xs = reduce_to_2p(inner, tol, inner_opts, &r);
    absorb(r);
    ++rep.evaluations;
    const double hn = h_norm(xs);
    if (!(hn > 0.0)) throw SearchError("h vanished at a positive multiplier");
    return s - log_target(hn);
  };

  double s = log_target(norm);
  FlowVector xs;
  double rho = evaluate(s, xs);
  x = xs;
  bool have_lo = false, have_hi = false;
  double s_lo = 0, r_lo = 0, s_hi = 0, r_hi = 0;
  double s_prev = 0, r_prev = 0;
  bool have_prev = false;
  int side = 0;
  auto record = [&](double sv, double rv) {
    if (rv < 0.0) {
      have_lo = true;
      s_lo = sv;
      r_lo = rv;
    } else {
      have_hi = true;
      s_hi = sv;
      r_hi = rv;
    }
  };
  record(s, rho);

  while (std::abs(rho) > options.multiplier_tol) {
    if (rep.evaluations >= options.max_evaluations) {
      throw SearchError("multiplier search did not converge; residual " + std::to_string(rho));
    }
    double next;
    if (have_lo && have_hi) {
      if (s_hi - s_lo <= 1e-15 * (1.0 + std::abs(s))) break;
      // Illinois false position.
      next = s_hi - r_hi * (s_hi - s_lo) / (r_hi - r_lo);
      if (!(next > s_lo && next < s_hi)) next = 0.5 * (s_lo + s_hi);
    } else if (have_prev && rho != r_prev) {
      // Secant slope, clamped to the range (0, 1] that rho's slope lives in.
      const double slope = std::clamp((rho - r_prev) / (s - s_prev), 1e-3, 1.0);
      next = s - rho / slope;
    } else {
      next = s - rho;
    }
    s_prev = s;
    r_prev = rho;
    have_prev = true;
    s = next;
    rho = evaluate(s, xs);
    x = xs;
    const int new_side = rho < 0.0 ? -1 : 1;
    if (have_lo && have_hi) {
      if (new_side < 0) {
        if (side < 0) r_hi /= 2.0;
      } else {
        if (side > 0) r_lo /= 2.0;
      }
    }
    side = new_side;
    record(s, rho);
  }
  rep.multiplier = std::exp(s);
  if (report) *report = rep;
  return x;
}

}  // namespace divflow
