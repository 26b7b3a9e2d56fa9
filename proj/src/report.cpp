#include "divflow/report.hpp"

#include <json.hpp>

#include <cmath>

namespace divflow {

namespace {

using nlohmann::ordered_json;

// JSON has no infinities or NaN.
ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

ordered_json step_json(const StepDiagnostics& d) {
  return ordered_json{
      {"step", d.step},
      {"residual_flow", number(d.residual_flow)},
      {"delta", number(d.delta)},
      {"delta_ratio", number(d.delta_ratio)},
      {"divergence", number(d.divergence)},
      {"tval", number(d.tval)},
      {"max_congestion", number(d.max_congestion)},
      {"max_step", number(d.max_step)},
      {"max_step_over_c2", number(d.max_step_over_c2)},
      {"mu_l1", number(d.mu_l1)},
      {"nu_l1", number(d.nu_l1)},
      {"nu_min", number(d.nu_min)},
      {"nu_product_max", number(d.nu_product_max)},
      {"mu_neutrality", number(d.mu_neutrality)},
      {"w_l1_before", number(d.w_l1_before)},
      {"w_l1_with_mu", number(d.w_l1_with_mu)},
      {"w_l1_after", number(d.w_l1_after)},
      {"min_precond_residual", number(d.min_precond_residual)},
      {"acyclic", d.acyclic},
      {"centrality_before", number(d.centrality_before)},
      {"centrality_after", number(d.centrality_after)},
      {"recenter_gap", number(d.recenter_gap)},
      {"flips", d.flips},
      {"recenter_iterations", d.recenter_iterations},
      {"multiplier_evaluations", d.multiplier_evaluations},
      {"refinement_sweeps", d.refinement_sweeps},
      {"oracle_calls", d.oracle_calls},
      {"linear_solves", d.linear_solves},
  };
}

}  // namespace

std::string report_json(const RunReport& report, const JsonOptions& options) {
  ordered_json doc;
  doc["schema"] = "divflow/1";
  doc["value"] = report.value;
  doc["n"] = report.n;
  doc["m"] = report.m;
  doc["m_preconditioned"] = report.m_preconditioned;
  doc["U"] = number(report.U);
  doc["eta"] = number(report.eta);
  doc["W"] = number(report.W);
  doc["p"] = report.p;
  doc["steps"] = report.steps;
  doc["rejections"] = report.rejections;
  doc["oracle_calls"] = report.oracle_calls;
  doc["linear_solves"] = report.linear_solves;
  doc["augmentations"] = report.augmentations;
  doc["cut_certificate"] = report.cut_certificate;

  ordered_json probes = ordered_json::array();
  for (const ProbeRecord& r : report.probes) {
    ordered_json p{{"guess", r.guess}, {"ipm_completed", r.ipm_completed}, {"steps", r.steps}};
    if (!r.ipm_completed) p["failure"] = r.failure;
    p["value"] = r.value;
    p["exhausted"] = r.exhausted;
    p["augmentations"] = r.augmentations;
    probes.push_back(std::move(p));
  }
  doc["probes"] = std::move(probes);

  if (options.timings) {
    doc["phases"] = {{"ipm_ms", report.ipm_ms}, {"round_ms", report.round_ms}, {"ap_ms", report.ap_ms}};
  }

  ordered_json checks = ordered_json::object();
  for (const auto& [name, s] : report.checks) {
    checks[name] = {{"status", s.violations == 0 ? "pass" : "fail"},
                    {"evaluated", s.evaluated},
                    {"violations", s.violations},
                    {"worst_ratio", number(s.worst_ratio)},
                    {"worst_measured", number(s.worst_measured)},
                    {"worst_bound", number(s.worst_bound)}};
  }
  checks["max_centrality"] = number(report.max_centrality);
  checks["max_recenter_gap"] = number(report.max_recenter_gap);
  doc["checks"] = std::move(checks);

  if (report.reference_value) {
    doc["verify"] = {{"reference_value", *report.reference_value}, {"match", report.verified}};
  }
  if (options.flow) {
    ordered_json flow = ordered_json::array();
    for (Eigen::Index e = 0; e < report.flow.size(); ++e) flow.push_back(static_cast<long long>(std::llround(report.flow[e])));
    doc["flow"] = std::move(flow);
  }
  return doc.dump(options.indent) + "\n";
}

std::string step_trace_jsonl(const std::vector<StepDiagnostics>& steps) {
  std::string out;
  for (const StepDiagnostics& d : steps) out += step_json(d).dump() + "\n";
  return out;
}

}  // namespace divflow
