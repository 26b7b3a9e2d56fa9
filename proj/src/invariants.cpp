#include "divflow/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace divflow {

namespace {

// Analytic bounds carry this multiplicative slack; exact identities do not.
constexpr double kSlack = 1.01;

LemmaCheck make_check(std::string name, double measured, double bound) {
  return {std::move(name), measured, bound, measured <= bound};
}

}  // namespace

std::vector<LemmaCheck> check_step_invariants(const CentralPathState& before, const AugmentResult& result) {
  const Graph& g = *before.graph;
  const PathParameters& params = before.params;
  const ResidualCaps& caps = result.caps;
  const double m = params.m;
  const double rho = result.diagnostics.delta_ratio;
  const double m2eta = std::pow(m, 2.0 * params.eta);
  const Eigen::VectorXd x = caps.to_frame(result.step);
  const Weights wf = before.w.oriented(caps.sign);

  std::vector<LemmaCheck> out;
  const double divergence = divergence_tilde(wf, caps, x, params.epsilon).value;
  out.push_back(make_check("divergence", divergence, kSlack * 5e-7 * m2eta * rho * rho));
  out.push_back(make_check("congestion", (x.cwiseAbs().array() / caps.up.array()).maxCoeff(), 1.0 / 20.0));
  out.push_back(make_check("step_magnitude", x.lpNorm<Eigen::Infinity>(), kSlack * rho / (500.0 * m2eta)));
  out.push_back(
      make_check("step_over_c2", (x.cwiseAbs().array() / caps.up.array().square()).maxCoeff(), kSlack * m2eta * rho));
  out.push_back(make_check("mu_l1", result.mu.l1(), kSlack * m / 2.0));

  double neutrality = 0.0;
  for (Eigen::Index e = 0; e < caps.size(); ++e) {
    const double lhs = result.mu.up[e] / caps.up[e];
    if (lhs > 0.0) neutrality = std::max(neutrality, std::abs(lhs - result.mu.down[e] / caps.down[e]) / lhs);
  }
  out.push_back(make_check("mu_neutrality", neutrality, 1e-12));

  const double nu_min = std::min(result.nu.up.minCoeff(), result.nu.down.minCoeff());
  out.push_back(make_check("nu_nonnegative", -nu_min, 0.0));
  out.push_back(make_check("nu_one_sided", (result.nu.up.array() * result.nu.down.array()).abs().maxCoeff(), 0.0));
  out.push_back(make_check("nu_l1", result.nu.l1(),
                           kSlack * rho * std::pow(m, 4.0 * params.eta) * params.U * std::pow(m, 1.0 / params.p)));

  const double w_l1 = before.w.l1();
  out.push_back(make_check("weights_l1", w_l1, 2.5 * m));
  out.push_back(make_check("weights_with_mu_l1", w_l1 + result.mu.l1(), 3.0 * m));

  // Preconditioning edges keep residual capacity F_t/(21m) while ||w||_1 <= 3m.
  if (w_l1 <= 3.0 * m) {
    double smallest = std::numeric_limits<double>::infinity();
    for (int e : g.precond_edge_ids()) smallest = std::min(smallest, caps.up[e]);
    const double need = before.residual_flow() / (21.0 * m);
    out.push_back({"precond_residual", need, smallest, need <= smallest});
  }
  out.push_back(make_check("acyclic", flow_is_acyclic(g, result.step) ? 0.0 : 1.0, 0.0));
  return out;
}

}  // namespace divflow
