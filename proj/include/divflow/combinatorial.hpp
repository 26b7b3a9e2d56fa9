#pragma once

#include "divflow/graph.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace divflow {

/// Net inflow at the sink, B^T f at b.
double flow_value(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f, int b);

/// True when -cap_down - tol <= f <= cap_up + tol and B^T f = value chi within tol.
bool is_feasible_flow(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f, int a, int b, double tol = 1e-9);

/// Integral flow from a feasible fractional one on an integral graph. Every round
/// pushes around a cycle or along an a-b path of fractional edges until one of
/// them becomes integral; paths are pushed toward b, cycles in the direction of
/// their lowest-id edge. The value never decreases.
FlowVector round_to_integral(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f, int a, int b);

struct AugmentingResult {
  FlowVector flow;
  std::int64_t value = 0;
  int augmentations = 0;
  /// False when the limit stopped the search before the residual graph ran out of paths.
  bool exhausted = false;
  /// Vertices reachable from a in the final residual graph; a minimum cut when exhausted.
  std::vector<char> source_side;
  std::int64_t cut_capacity = 0;
};

/// Shortest augmenting paths from an integral feasible flow until none remains,
/// or until the value reaches limit.
AugmentingResult augmenting_paths(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& start, int a, int b,
                                  std::optional<std::int64_t> limit = std::nullopt);

struct MaxflowResult {
  std::int64_t value = 0;
  FlowVector flow;
};

/// Dinic's blocking-flow algorithm on the integral graph; the correctness oracle.
MaxflowResult reference_maxflow(const Graph& g, int a, int b);

}  // namespace divflow
