#include "divflow/graph.hpp"

#include "divflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace divflow {

namespace {

void check_vertex(const Graph& g, int v, const char* what) {
  if (v < 0 || v >= g.n()) {
    throw DomainError(std::string(what) + " vertex " + std::to_string(v) + " out of range");
  }
}

// Uniform integer in [lo, hi] by rejection; avoids the implementation-defined
// std::uniform_int_distribution so seeds reproduce across standard libraries.
std::int64_t draw(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t x = 0;
  do {
    x = rng();
  } while (x >= limit);
  return lo + static_cast<std::int64_t>(x % span);
}

}  // namespace

Graph::Graph(int n, std::vector<Edge> edges, Eigen::VectorXd cap_up, Eigen::VectorXd cap_down)
    : n_(n), edges_(std::move(edges)), cap_up_(std::move(cap_up)), cap_down_(std::move(cap_down)) {
  if (n_ < 0) throw DomainError("negative vertex count");
  const auto m = static_cast<Eigen::Index>(edges_.size());
  if (cap_up_.size() != m || cap_down_.size() != m) {
    throw DimensionError("capacity vectors must have one entry per edge");
  }
  for (Eigen::Index e = 0; e < m; ++e) {
    const Edge& ed = edges_[static_cast<std::size_t>(e)];
    if (ed.tail < 0 || ed.tail >= n_ || ed.head < 0 || ed.head >= n_) {
      throw DomainError("edge " + std::to_string(e) + " has an endpoint out of range");
    }
    if (ed.tail == ed.head) throw DomainError("self-loop at edge " + std::to_string(e));
    const double up = cap_up_[e];
    const double down = cap_down_[e];
    if (!(up >= 0.0) || !(down >= 0.0) || !std::isfinite(up) || !std::isfinite(down)) {
      throw DomainError("edge " + std::to_string(e) + " has a negative or non-finite capacity");
    }
    if (up + down <= 0.0) throw DomainError("edge " + std::to_string(e) + " has zero capacity");
    max_capacity_ = std::max({max_capacity_, up, down});
    integral_ = integral_ && up == std::floor(up) && down == std::floor(down);
    undirected_ = undirected_ && up == down;
  }
  base_capacity_ = max_capacity_;
}

DemandVector apply_incidence_transpose(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f) {
  if (f.size() != g.m()) throw DimensionError("flow length differs from edge count");
  DemandVector d = DemandVector::Zero(g.n());
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    const Edge& ed = g.edge(e);
    d[ed.tail] -= f[e];
    d[ed.head] += f[e];
  }
  return d;
}

Eigen::VectorXd apply_incidence(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() != g.n()) throw DimensionError("potential length differs from vertex count");
  Eigen::VectorXd out(g.m());
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    const Edge& ed = g.edge(e);
    out[e] = y[ed.head] - y[ed.tail];
  }
  return out;
}

DemandVector unit_demand(const Graph& g, int a, int b) {
  check_vertex(g, a, "source");
  check_vertex(g, b, "sink");
  if (a == b) throw DomainError("source equals sink");
  DemandVector chi = DemandVector::Zero(g.n());
  chi[a] = -1.0;
  chi[b] = 1.0;
  return chi;
}

Graph precondition(const Graph& g, int a, int b) {
  check_vertex(g, a, "source");
  check_vertex(g, b, "sink");
  if (a == b) throw DomainError("source equals sink");
  if (!g.is_undirected()) throw ContractError("preconditioning requires an undirected graph");
  if (g.is_preconditioned()) throw ContractError("graph is already preconditioned");

  const Eigen::Index m = g.m();
  const double cap = 2.0 * g.max_capacity();
  std::vector<Edge> edges = g.edges();
  Eigen::VectorXd up(2 * m);
  Eigen::VectorXd down(2 * m);
  up.head(m) = g.cap_up();
  down.head(m) = g.cap_down();
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    ids.push_back(static_cast<int>(m + i));
    edges.push_back({a, b});
    up[m + i] = cap;
    down[m + i] = cap;
  }
  Graph out(g.n(), std::move(edges), std::move(up), std::move(down));
  out.preconditioned_ = true;
  out.precond_edge_ids_ = std::move(ids);
  out.base_capacity_ = g.max_capacity();
  return out;
}

UndirectedReduction reduce_directed_to_undirected(const Graph& g, int a, int b) {
  check_vertex(g, a, "source");
  check_vertex(g, b, "sink");
  if (a == b) throw DomainError("source equals sink");
  if (g.is_undirected()) return {g, 0.0, 1.0};

  // Two-sided edge (lo, hi) splits into an undirected part min(lo, hi) and a
  // directed remainder. Undirected parts are doubled; a directed (u, v, c)
  // becomes undirected (a, v), (u, b), (u, v) of capacity c each. Every a-b cut
  // then costs sum(c) + 2 * (directed cut).
  std::vector<Edge> edges;
  std::vector<double> caps;
  double offset = 0.0;
  auto add = [&](int u, int v, double c) {
    if (u == v || c <= 0.0) return;
    edges.push_back({u, v});
    caps.push_back(c);
  };
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    const Edge& ed = g.edge(e);
    const double up = g.cap_up()[e];
    const double down = g.cap_down()[e];
    const double sym = std::min(up, down);
    add(ed.tail, ed.head, 2.0 * sym);
    int u = ed.tail;
    int v = ed.head;
    double c = up - sym;
    if (down > up) {
      std::swap(u, v);
      c = down - sym;
    }
    if (c > 0.0) {
      add(a, v, c);
      add(u, b, c);
      add(u, v, c);
      offset += c;
    }
  }
  const Eigen::Map<const Eigen::VectorXd> cap(caps.data(), static_cast<Eigen::Index>(caps.size()));
  return {Graph(g.n(), std::move(edges), cap, cap), offset, 2.0};
}

Instance random_instance(std::uint64_t seed, int n, int m, int U, bool directed) {
  if (n < 2) throw DomainError("random instance needs at least two vertices");
  if (m < 1) throw DomainError("random instance needs at least one edge");
  if (U < 1) throw DomainError("capacity bound must be positive");
  std::mt19937_64 rng(seed);
  const int a = 0;
  const int b = n - 1;

  // Guaranteed a-b path through a random subset of the interior vertices.
  std::vector<int> interior(static_cast<std::size_t>(n - 2));
  std::iota(interior.begin(), interior.end(), 1);
  for (std::size_t i = interior.size(); i > 1; --i) {
    std::swap(interior[i - 1], interior[static_cast<std::size_t>(draw(rng, 0, static_cast<std::int64_t>(i) - 1))]);
  }
  const int hops = std::min(m, n - 1);
  std::vector<int> path{a};
  for (int i = 0; i + 1 < hops; ++i) path.push_back(interior[static_cast<std::size_t>(i)]);
  path.push_back(b);

  std::vector<Edge> edges;
  std::vector<double> caps;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    edges.push_back({path[i], path[i + 1]});
    caps.push_back(static_cast<double>(draw(rng, 1, U)));
  }
  while (static_cast<int>(edges.size()) < m) {
    const int u = static_cast<int>(draw(rng, 0, n - 1));
    const int v = static_cast<int>(draw(rng, 0, n - 1));
    if (u == v) continue;
    edges.push_back({u, v});
    caps.push_back(static_cast<double>(draw(rng, 1, U)));
  }
  const Eigen::Map<const Eigen::VectorXd> cap(caps.data(), static_cast<Eigen::Index>(caps.size()));
  Eigen::VectorXd down = directed ? Eigen::VectorXd::Zero(cap.size()) : Eigen::VectorXd(cap);
  return {Graph(n, std::move(edges), cap, std::move(down)), a, b};
}

}  // namespace divflow
