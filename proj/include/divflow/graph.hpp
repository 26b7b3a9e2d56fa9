#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace divflow {

using FlowVector = Eigen::VectorXd;
using DemandVector = Eigen::VectorXd;
using PotentialVector = Eigen::VectorXd;

struct Edge {
  int tail = 0;
  int head = 0;
};

/// Capacitated graph with two-sided edge capacities.
///
/// Edge e = (tail, head) admits flow f_e in [-cap_down(e), cap_up(e)]; positive
/// flow moves from tail to head. Incidence row e has -1 at tail and +1 at head,
/// so (B^T f)_v is the net inflow at v. Immutable once built.
class Graph {
 public:
  Graph() = default;
  Graph(int n, std::vector<Edge> edges, Eigen::VectorXd cap_up, Eigen::VectorXd cap_down);

  int n() const { return n_; }
  Eigen::Index m() const { return static_cast<Eigen::Index>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(Eigen::Index e) const { return edges_[static_cast<std::size_t>(e)]; }
  const Eigen::VectorXd& cap_up() const { return cap_up_; }
  const Eigen::VectorXd& cap_down() const { return cap_down_; }

  /// Largest single-direction capacity; zero for an edgeless graph.
  double max_capacity() const { return max_capacity_; }
  bool is_integral() const { return integral_; }
  /// True when every edge has cap_up == cap_down.
  bool is_undirected() const { return undirected_; }

  bool is_preconditioned() const { return preconditioned_; }
  const std::vector<int>& precond_edge_ids() const { return precond_edge_ids_; }
  /// Max capacity of the instance before preconditioning edges were added.
  double base_capacity() const { return base_capacity_; }

  friend Graph precondition(const Graph& g, int a, int b);

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  Eigen::VectorXd cap_up_;
  Eigen::VectorXd cap_down_;
  double max_capacity_ = 0.0;
  double base_capacity_ = 0.0;
  bool integral_ = true;
  bool undirected_ = true;
  bool preconditioned_ = false;
  std::vector<int> precond_edge_ids_;
};

/// Net inflow B^T f at every vertex.
DemandVector apply_incidence_transpose(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f);

/// Potential differences B y, one per edge.
Eigen::VectorXd apply_incidence(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Unit demand that routes one unit from a to b: -1 at a, +1 at b.
DemandVector unit_demand(const Graph& g, int a, int b);

/// Appends m undirected a-b edges of capacity 2U, where U is the current max
/// capacity. The max-flow value grows by exactly 2mU.
Graph precondition(const Graph& g, int a, int b);

/// Undirected instance equivalent to a directed one:
/// maxflow(directed) = (maxflow(graph) - value_offset) / value_scale.
struct UndirectedReduction {
  Graph graph;
  double value_offset = 0.0;
  double value_scale = 1.0;
};

UndirectedReduction reduce_directed_to_undirected(const Graph& g, int a, int b);

struct Instance {
  Graph graph;
  int source = 0;
  int sink = 0;
};

/// Parses DIMACS max-flow text ("p max", "n ... s|t", "a u v cap"; 1-based ids).
Instance parse_dimacs(std::string_view text);

std::string to_dimacs(const Instance& instance);

/// Seeded instance with integer capacities in [1, U] and an a-b path guaranteed.
/// Undirected instances store symmetric capacities.
Instance random_instance(std::uint64_t seed, int n, int m, int U, bool directed = true);

}  // namespace divflow
