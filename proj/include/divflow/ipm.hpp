#pragma once

#include "divflow/barrier.hpp"
#include "divflow/graph.hpp"
#include "divflow/laplacian.hpp"
#include "divflow/refinement.hpp"

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace divflow {

/// Progress exponent eta, weight budget W = m^{6 eta} and norm exponent p for
/// a preconditioned graph with m edges and base capacity U.
struct PathParameters {
  double eta = 0.0;
  double W = 1.0;
  int p = 4;
  double epsilon = 0.1;
  double m = 1.0;
  double U = 1.0;

  /// eta = 1/6 - log_m(U)/3 - c0/ln m; p = 2 ceil(sqrt(ln m)) clamped to [4, 32].
  static PathParameters for_graph(const Graph& g, std::optional<double> eta_override = std::nullopt,
                                  double c0 = 1.0);
  /// Loop guard m^{1/2 - eta}: stepping continues while F_t is at least this.
  double threshold() const;
  /// delta = F_t / (constant * m^{1/2 - eta}).
  double step_size(double residual_flow, double constant) const;
};

enum class DeltaProfile { kPaper, kAdaptive };

struct IpmOptions {
  DeltaProfile profile = DeltaProfile::kAdaptive;
  double paper_constant = 1e5;
  double adaptive_start = 10.0;
  /// Adaptive constants above this count as a step-rejection cascade.
  double adaptive_ceiling = 1e5 * 1024.0;
  double congestion_limit = 1.0 / 20.0;
  double center_tol = 1e-10;
  /// Additive tolerance of the step subproblem in units of delta^2.
  double oracle_tol = 1e-12;
  int max_recenter_iterations = 60;
  long max_steps = 50'000'000;
  /// Recompute the post-step central point from scratch when m is at most this.
  Eigen::Index independent_check_edges = 0;
  /// Keep the full per-step diagnostics list; the summary is always kept.
  bool keep_diagnostics = true;
};

/// A point f*_{t,w} on the weighted central path of a preconditioned graph.
struct CentralPathState {
  std::shared_ptr<const Graph> graph;
  int source = 0;
  int sink = 1;
  Weights w;
  FlowVector f;
  double t = 0.0;
  /// Current guess t* for the optimum; F_t = target - t.
  double target = 0.0;
  PathParameters params;

  double residual_flow() const { return target - t; }
};

/// f = 0, t = 0, w = 1, which is exactly central.
CentralPathState initial_state(std::shared_ptr<const Graph> graph, int source, int sink, double target,
                               const PathParameters& params);

struct StepDiagnostics {
  long step = 0;
  double residual_flow = 0.0;
  double delta = 0.0;
  /// delta / delta_fixed; every delta-dependent bound scales by this (exactly 1 in the fixed profile).
  double delta_ratio = 1.0;
  double divergence = 0.0;  // tilde D_w(f_hat)
  double tval = 0.0;
  double max_congestion = 0.0;  // max |f_hat| / c
  double max_step = 0.0;        // max |f_hat|
  double max_step_over_c2 = 0.0;
  double mu_l1 = 0.0;
  double nu_l1 = 0.0;
  double nu_min = 0.0;
  double nu_product_max = 0.0;  // max_e nu+ nu-
  double mu_neutrality = 0.0;   // max_e |mu+/c+ - mu-/c-| / (mu+/c+)
  double w_l1_before = 0.0;
  double w_l1_with_mu = 0.0;
  double w_l1_after = 0.0;
  double min_precond_residual = 0.0;
  bool acyclic = true;
  double centrality_before = 0.0;
  double centrality_after = 0.0;
  double recenter_gap = -1.0;  // distance to an independently recentered point; negative when not computed
  int flips = 0;
  int recenter_iterations = 0;
  int multiplier_evaluations = 0;
  int refinement_sweeps = 0;
  int oracle_calls = 0;
  int linear_solves = 0;
};

struct AugmentResult {
  double delta = 0.0;
  FlowVector step;  // f_hat in graph orientation
  Weights nu;       // graph orientation
  /// Frame data used by the invariant checks: normalized residual caps, mu in that frame.
  ResidualCaps caps;
  Weights mu;
  StepDiagnostics diagnostics;
};

/// Solves the step subproblem for delta = F_t / (constant m^{1/2-eta}),
/// then forms mu and the reduced change nu. Throws StepRejected when the step's
/// congestion exceeds the limit.
AugmentResult augment(FlowSpace& space, const CentralPathState& state, double step_constant,
                      const IpmOptions& options = {});

/// True when no directed cycle runs along the flow direction of every nonzero edge.
bool flow_is_acyclic(const Graph& g, const FlowVector& f);

/// Applies f += f_hat, w += nu, t += delta.
void apply_step(CentralPathState& state, const AugmentResult& result);

struct RecenterReport {
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> barrier_trace;
};

/// Damped Newton on the weighted barrier over {B^T f = t chi}; each direction is one
/// Laplacian solve with the barrier Hessian as resistances.
RecenterReport recenter(FlowSpace& space, CentralPathState& state, double tol, int max_iterations = 60,
                        bool keep_trace = false);

/// One measured inequality: pass iff measured <= bound.
struct LemmaCheck {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = true;
};

/// Evaluates every per-step lemma against the state the step was taken from.
/// Recomputes from the result's frame data, so corrupted fields are caught.
std::vector<LemmaCheck> check_step_invariants(const CentralPathState& before, const AugmentResult& result);

/// Central point for (t_new, w_new) computed from the pre-step flow by an
/// electric-flow predictor and Newton, independent of the step subproblem.
FlowVector independent_central_point(const Graph& g, int source, int sink, const Weights& w_new,
                                     const FlowVector& f_old, double t_old, double t_new, double tol = 1e-12);

}  // namespace divflow
