#include "divflow/ipm.hpp"

#include "divflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace divflow {

PathParameters PathParameters::for_graph(const Graph& g, std::optional<double> eta_override, double c0) {
  if (g.m() < 2) throw ContractError("path parameters need at least two edges");
  PathParameters out;
  out.m = static_cast<double>(g.m());
  out.U = std::max(1.0, g.base_capacity());
  const double log_m = std::log(out.m);
  out.eta = eta_override ? *eta_override : 1.0 / 6.0 - std::log(out.U) / (3.0 * log_m) - c0 / log_m;
  out.W = std::pow(out.m, 6.0 * out.eta);
  out.p = std::clamp(2 * static_cast<int>(std::ceil(std::sqrt(log_m))), 4, 32);
  return out;
}

double PathParameters::threshold() const { return std::pow(m, 0.5 - eta); }

double PathParameters::step_size(double residual_flow, double constant) const {
  return residual_flow / (constant * threshold());
}

CentralPathState initial_state(std::shared_ptr<const Graph> graph, int source, int sink, double target,
                               const PathParameters& params) {
  if (!graph) throw ContractError("central path state needs a graph");
  if (!graph->is_preconditioned()) throw ContractError("central path runs on a preconditioned graph");
  CentralPathState s;
  s.w = Weights::ones(graph->m());
  s.f = FlowVector::Zero(graph->m());
  s.source = source;
  s.sink = sink;
  s.target = target;
  s.params = params;
  s.graph = std::move(graph);
  return s;
}

namespace {

// Step objective pieces in the scaled variable y = f_hat / delta, graph orientation.
// The quadratic family is tilde D_w(delta y) / delta^2 per edge; the power family is
// W v_e(delta y) / delta^2, so that tval(delta y) = delta^2 (sum q + ||h||_p).
class StepFamily final : public PieceFamily {
 public:
  StepFamily(PieceKind kind, const Weights& w, const ResidualCaps& caps, double delta, double W, double eps)
      : kind_(kind), w_(w), caps_(caps), delta_(delta), W_(W), eps_(eps) {
    if (kind_ == PieceKind::kQuadratic) {
      curvature_ = (w_.up.array() / caps_.up.array().square() + w_.down.array() / caps_.down.array().square()).matrix();
    } else {
      curvature_ = Eigen::VectorXd::Constant(caps_.size(), W_);
    }
  }

  Eigen::Index size() const override { return caps_.size(); }
  PieceKind kind() const override { return kind_; }
  const Eigen::VectorXd& curvature() const override { return curvature_; }

  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::VectorXd* value, Eigen::VectorXd* d1,
                Eigen::VectorXd* d2) const override {
    const Eigen::Index m = size();
    if (y.size() != m) throw DimensionError("step family evaluated at a vector of the wrong length");
    if (value) value->resize(m);
    if (d1) d1->resize(m);
    if (d2) d2->resize(m);
    for (Eigen::Index e = 0; e < m; ++e) {
      const double s = caps_.sign[e];
      const double cu = caps_.up[e];
      const double cd = caps_.down[e];
      const double x = delta_ * s * y[e];
      const Jet<double> jp = phitilde_jet(x / cu, eps_);
      const Jet<double> jm = phitilde_jet(-x / cd, eps_);
      const double inv = 1.0 / (delta_ * delta_);
      if (kind_ == PieceKind::kQuadratic) {
        if (value) (*value)[e] = (w_.up[e] * jp.value + w_.down[e] * jm.value) * inv;
        if (d1) (*d1)[e] = s * (w_.up[e] * jp.d1 / cu - w_.down[e] * jm.d1 / cd) / delta_;
        if (d2) (*d2)[e] = w_.up[e] * jp.d2 / (cu * cu) + w_.down[e] * jm.d2 / (cd * cd);
      } else {
        if (value) (*value)[e] = W_ * (cu * cu * jp.value + cu * cd * jm.value) * inv;
        if (d1) (*d1)[e] = W_ * s * cu * (jp.d1 - jm.d1) / delta_;
        if (d2) (*d2)[e] = W_ * (jp.d2 + (cu / cd) * jm.d2);
      }
    }
  }

 private:
  PieceKind kind_;
  Weights w_;
  ResidualCaps caps_;
  double delta_;
  double W_;
  double eps_;
  Eigen::VectorXd curvature_;
};

}  // namespace

bool flow_is_acyclic(const Graph& g, const FlowVector& f) {
  const double cutoff = 1e-14 * std::max(1e-300, f.lpNorm<Eigen::Infinity>());
  std::vector<std::vector<int>> out(static_cast<std::size_t>(g.n()));
  std::vector<int> indegree(static_cast<std::size_t>(g.n()), 0);
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    if (std::abs(f[e]) <= cutoff) continue;
    int from = g.edge(static_cast<int>(e)).tail;
    int to = g.edge(static_cast<int>(e)).head;
    if (f[e] < 0.0) std::swap(from, to);
    out[static_cast<std::size_t>(from)].push_back(to);
    ++indegree[static_cast<std::size_t>(to)];
  }
  std::vector<int> queue;
  for (int v = 0; v < g.n(); ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
  }
  std::size_t seen = 0;
  while (seen < queue.size()) {
    const int v = queue[seen++];
    for (int u : out[static_cast<std::size_t>(v)]) {
      if (--indegree[static_cast<std::size_t>(u)] == 0) queue.push_back(u);
    }
  }
  return seen == static_cast<std::size_t>(g.n());
}

AugmentResult augment(FlowSpace& space, const CentralPathState& state, double step_constant,
                      const IpmOptions& options) {
  const Graph& g = *state.graph;
  const PathParameters& params = state.params;
  const double residual = state.residual_flow();
  if (!(residual > 0.0)) throw ContractError("augment needs a positive residual flow");
  if (!(step_constant > 0.0)) throw DomainError("step constant must be positive");

  AugmentResult out;
  StepDiagnostics& diag = out.diagnostics;
  out.delta = params.step_size(residual, step_constant);
  diag.residual_flow = residual;
  diag.delta = out.delta;
  diag.delta_ratio = step_constant > 0.0 ? options.paper_constant / step_constant : 1.0;

  out.caps = ResidualCaps::from_flow(g, state.f).normalized();
  const ResidualCaps& caps = out.caps;
  diag.flips = static_cast<int>((caps.sign.array() < 0.0).count());
  const Weights wf = state.w.oriented(caps.sign);

  RefinementProblem problem;
  problem.space = std::shared_ptr<FlowSpace>(std::shared_ptr<FlowSpace>{}, &space);
  problem.demand = unit_demand(g, state.source, state.sink);
  problem.q = std::make_shared<StepFamily>(PieceKind::kQuadratic, wf, caps, out.delta, params.W, params.epsilon);
  problem.h = std::make_shared<StepFamily>(PieceKind::kPower, wf, caps, out.delta, params.W, params.epsilon);
  problem.p = params.p;
  problem.W = 1.0;

  LpNormReport lp;
  const FlowVector scaled = solve_lp_norm(problem, options.oracle_tol, {}, &lp);
  diag.multiplier_evaluations = lp.evaluations;
  diag.refinement_sweeps = lp.sweeps;
  diag.oracle_calls = lp.oracle_calls;
  diag.linear_solves = lp.linear_solves;

  out.step = out.delta * scaled;
  const Eigen::VectorXd x = caps.to_frame(out.step);
  diag.max_congestion = (x.cwiseAbs().array() / caps.up.array()).maxCoeff();
  diag.max_step = x.lpNorm<Eigen::Infinity>();
  diag.max_step_over_c2 = (x.cwiseAbs().array() / caps.up.array().square()).maxCoeff();
  if (!(diag.max_congestion <= options.congestion_limit)) {
    throw StepRejected("step congestion " + std::to_string(diag.max_congestion) + " exceeds the limit",
                       diag.max_congestion);
  }

  const ObjectiveParams objective{params.epsilon, params.p, params.W};
  const ValObjectives obj = val_objectives(wf, caps, objective, x);
  diag.tval = obj.tval;
  diag.divergence = obj.tval - params.W * obj.v_norm;

  // Preliminary weight change: centrality-neutral since mu+/c+ = mu-/c-.
  const Eigen::Index m = g.m();
  out.mu.up = Eigen::VectorXd::Zero(m);
  if (obj.v_norm > 0.0) {
    out.mu.up = (params.W * caps.up.array().square() * (obj.v / obj.v_norm).array().pow(params.p - 1)).matrix();
  }
  out.mu.down = (caps.down.array() / caps.up.array() * out.mu.up.array()).matrix();

  // Reduced weight change: one side per edge, same gradient shift at the new flow.
  Weights nu{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)};
  for (Eigen::Index e = 0; e < m; ++e) {
    const double up_slack = caps.up[e] - x[e];
    const double down_slack = caps.down[e] + x[e];
    const double shift = out.mu.up[e] / up_slack - out.mu.down[e] / down_slack;
    if (shift >= 0.0) {
      nu.up[e] = up_slack * shift;
    } else {
      nu.down[e] = -down_slack * shift;
    }
  }
  out.nu = nu.oriented(caps.sign);

  diag.mu_l1 = out.mu.l1();
  diag.nu_l1 = out.nu.l1();
  diag.nu_min = std::min(out.nu.up.minCoeff(), out.nu.down.minCoeff());
  diag.nu_product_max = (out.nu.up.array() * out.nu.down.array()).maxCoeff();
  diag.w_l1_before = state.w.l1();
  diag.w_l1_with_mu = diag.w_l1_before + diag.mu_l1;
  diag.w_l1_after = diag.w_l1_before + diag.nu_l1;
  double neutrality = 0.0;
  for (Eigen::Index e = 0; e < m; ++e) {
    const double lhs = out.mu.up[e] / caps.up[e];
    if (lhs > 0.0) neutrality = std::max(neutrality, std::abs(lhs - out.mu.down[e] / caps.down[e]) / lhs);
  }
  diag.mu_neutrality = neutrality;
  diag.min_precond_residual = std::numeric_limits<double>::infinity();
  for (int e : g.precond_edge_ids()) diag.min_precond_residual = std::min(diag.min_precond_residual, caps.up[e]);
  diag.acyclic = flow_is_acyclic(g, out.step);
  return out;
}

void apply_step(CentralPathState& state, const AugmentResult& result) {
  state.f += result.step;
  state.w.up += result.nu.up;
  state.w.down += result.nu.down;
  state.t += result.delta;
}

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kStalledResidual = 1e-7;

// Barrier value, or +inf outside the strict feasible region.
double barrier_or_inf(const Graph& g, const Weights& w, const FlowVector& f) {
  const Eigen::ArrayXd up = g.cap_up().array() - f.array();
  const Eigen::ArrayXd down = g.cap_down().array() + f.array();
  if (!((up > 0.0).all() && (down > 0.0).all())) return std::numeric_limits<double>::infinity();
  return -(w.up.array() * up.log() + w.down.array() * down.log()).sum();
}

}  // namespace

RecenterReport recenter(FlowSpace& space, CentralPathState& state, double tol, int max_iterations,
                        bool keep_trace) {
  const Graph& g = *state.graph;
  const DemandVector target = state.t * unit_demand(g, state.source, state.sink);
  RecenterReport rep;
  double value = barrier_or_inf(g, state.w, state.f);
  if (!std::isfinite(value)) throw DomainError("recenter needs a strictly feasible flow");
  if (keep_trace) rep.barrier_trace.push_back(value);
  double previous = std::numeric_limits<double>::infinity();
  int increases = 0;
  LaplacianSolver& solver = space.weighted();

  for (rep.iterations = 0;; ++rep.iterations) {
    const Eigen::VectorXd grad = barrier_gradient(g, state.w, state.f);
    rep.residual = space.projector().project(grad).norm() / std::max(1.0, grad.norm());
    if (rep.residual <= tol) break;
    increases = rep.residual > previous ? increases + 1 : 0;
    if (increases >= 5) throw ConvergenceError("recenter diverged", rep.residual);
    if (rep.iterations >= max_iterations) throw ConvergenceError("recenter iteration cap reached", rep.residual);
    previous = rep.residual;

    const Eigen::VectorXd hess = barrier_hessian(g, state.w, state.f);
    solver.factorize(hess);
    PotentialVector y;
    solver.solve(solver.net_inflow(grad.cwiseQuotient(hess)), y, 1e-11);
    const FlowVector step = -(grad - solver.potential_differences(y)).cwiseQuotient(hess);
    const double decrement = -grad.dot(step);
    if (!(decrement > 0.0)) break;

    double alpha = 1.0;
    FlowVector trial = state.f + step;
    double next = barrier_or_inf(g, state.w, trial);
    int halvings = 0;
    while (!(next <= value - kArmijo * alpha * decrement) && halvings < 60) {
      alpha /= 2.0;
      trial = state.f + alpha * step;
      next = barrier_or_inf(g, state.w, trial);
      ++halvings;
    }
    if (!(next <= value)) {
      // Rounding-level decrement: nothing representable left to gain.
      if (decrement <= 1e-14 * (1.0 + std::abs(value))) break;
      throw ConvergenceError("recenter line search failed", rep.residual);
    }
    // Keep B^T f = t chi exact despite the Laplacian solve's rounding.
    FlowVector repaired = space.projector().repair(trial, target);
    if (std::isfinite(barrier_or_inf(g, state.w, repaired))) trial = std::move(repaired);
    state.f = std::move(trial);
    value = barrier_or_inf(g, state.w, state.f);
    if (keep_trace) rep.barrier_trace.push_back(value);
  }
  return rep;
}

FlowVector independent_central_point(const Graph& g, int source, int sink, const Weights& w_new,
                                     const FlowVector& f_old, double t_old, double t_new, double tol) {
  auto graph = std::make_shared<const Graph>(g);
  FlowSpace space(*graph);
  CentralPathState s;
  s.graph = graph;
  s.source = source;
  s.sink = sink;
  s.w = w_new;
  s.f = f_old;
  s.t = t_old;
  const DemandVector chi = unit_demand(g, source, sink);
  // Continuation in t: electric-flow predictor with Hessian resistances, Newton corrector.
  double remaining = t_new - t_old;
  double piece = remaining;
  int guard = 0;
  // Some instances stall a little above tol at the floating-point floor; a
  // stalled point that is still well centered is accepted.
  auto settle = [&] {
    try {
      recenter(space, s, tol, 200);
    } catch (const ConvergenceError& e) {
      if (!(e.best_residual() <= kStalledResidual)) throw;
    }
  };
  settle();
  while (remaining > 0.0) {
    if (++guard > 400) throw ConvergenceError("independent recenter could not advance", remaining);
    const FlowVector predictor =
        electric_flow(g, barrier_hessian(g, s.w, s.f), piece * chi, 1e-12);
    const FlowVector trial = s.f + predictor;
    if (!std::isfinite(barrier_or_inf(g, s.w, trial))) {
      piece /= 2.0;
      continue;
    }
    s.f = trial;
    s.t += piece;
    remaining -= piece;
    piece = std::min(remaining, 2.0 * piece);
    settle();
  }
  return s.f;
}

}  // namespace divflow
