#pragma once

#include "divflow/combinatorial.hpp"
#include "divflow/graph.hpp"
#include "divflow/ipm.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace divflow {

enum class CheckLevel {
  kOff,     // only the preconditioning check, which detects overestimated targets
  kAssert,  // any other violation throws AlgorithmFailure
  kRecord,  // violations are counted and reported
};

struct RunConfig {
  IpmOptions ipm;
  std::optional<double> eta_override;
  std::optional<int> p_override;
  double c0 = 1.0;
  double epsilon = 0.1;
  CheckLevel checks = CheckLevel::kRecord;
  /// Bisect with probes capped at the guess down to this width; otherwise the
  /// first successful probe finishes with uncapped augmenting paths.
  bool exhaustive_search = false;
  std::int64_t granularity = 1;
  /// Cross-check against the reference solver; on by default up to 10^4 edges.
  std::optional<bool> verify;

  void validate() const;
  PathParameters parameters(const Graph& preconditioned) const;
};

/// Worst measured/bound ratio of one lemma over a run.
struct CheckSummary {
  long evaluated = 0;
  long violations = 0;
  double worst_ratio = 0.0;
  double worst_measured = 0.0;
  double worst_bound = 0.0;
};

/// One central-path run from t = 0 toward a target guess.
struct PathRun {
  bool completed = false;
  std::string failure;
  long steps = 0;
  long rejections = 0;
  CentralPathState state;
  std::vector<StepDiagnostics> diagnostics;
  std::map<std::string, CheckSummary> checks;
  long oracle_calls = 0;
  long linear_solves = 0;
  /// Largest independent-recenter gap (negative when never computed).
  double max_recenter_gap = -1.0;
  /// Largest residual after recentering, and right after a step before recentering.
  double max_centrality = 0.0;
  double max_post_step_centrality = 0.0;
  double ipm_ms = 0.0;
};

/// Augment/recenter loop on a preconditioned graph while F_t >= m^{1/2 - eta}.
/// Fails (completed = false) on a step-rejection cascade, a solver error, or a
/// preconditioning-residual violation, which signals a target above the optimum.
PathRun run_central_path(std::shared_ptr<const Graph> preconditioned, int source, int sink, double target,
                         const RunConfig& config);

struct ProbeRecord {
  std::int64_t guess = 0;
  bool ipm_completed = false;
  std::string failure;
  long steps = 0;
  std::int64_t value = -1;  // after rounding and augmenting paths; -1 when the IPM failed
  bool exhausted = false;
  int augmentations = 0;
};

struct RunReport {
  std::int64_t value = 0;
  /// Integral max flow on the undirected working instance (the input itself when undirected).
  FlowVector flow;
  int n = 0;
  Eigen::Index m = 0;
  Eigen::Index m_preconditioned = 0;
  double U = 0.0;
  double eta = 0.0;
  double W = 0.0;
  int p = 0;
  long steps = 0;
  long rejections = 0;
  long oracle_calls = 0;
  long linear_solves = 0;
  std::vector<ProbeRecord> probes;
  std::map<std::string, CheckSummary> checks;
  std::vector<StepDiagnostics> diagnostics;
  double max_recenter_gap = -1.0;
  double max_centrality = 0.0;
  int augmentations = 0;
  /// Capacity of the final reachable-set cut on the preconditioned graph, minus the offset.
  std::int64_t cut_certificate = 0;
  double ipm_ms = 0.0;
  double round_ms = 0.0;
  double ap_ms = 0.0;
  bool verified = false;
  std::optional<std::int64_t> reference_value;
};

/// Exact integral maximum flow: undirected reduction, preconditioning, binary
/// search over central-path probes, rounding and augmenting paths.
RunReport maxflow_ipm(const Graph& g, int source, int sink, const RunConfig& config = {});

/// Max-flow value of the input graph as found by the binary search inside maxflow_ipm.
std::int64_t binary_search_value(const Graph& g, int source, int sink, const RunConfig& config = {});

}  // namespace divflow
