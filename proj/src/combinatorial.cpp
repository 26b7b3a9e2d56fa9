#include "divflow/combinatorial.hpp"

#include "divflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace divflow {

namespace {

constexpr double kIntegralTol = 1e-9;

void check_terminals(const Graph& g, int a, int b) {
  if (a < 0 || b < 0 || a >= g.n() || b >= g.n()) throw DomainError("terminal out of range");
  if (a == b) throw ContractError("source and sink must differ");
}

std::int64_t to_int(double x) { return static_cast<std::int64_t>(std::llround(x)); }

// Residual view of an integral flow: arc 2e runs tail -> head, arc 2e+1 head -> tail.
struct Residual {
  std::vector<int> to;
  std::vector<std::int64_t> cap;
  std::vector<std::vector<int>> out;  // vertex -> arc ids, edge id order

  Residual(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f) : out(static_cast<std::size_t>(g.n())) {
    const auto m = static_cast<std::size_t>(g.m());
    to.resize(2 * m);
    cap.resize(2 * m);
    for (std::size_t e = 0; e < m; ++e) {
      const Edge& edge = g.edge(static_cast<Eigen::Index>(e));
      const std::int64_t x = to_int(f[static_cast<Eigen::Index>(e)]);
      to[2 * e] = edge.head;
      to[2 * e + 1] = edge.tail;
      cap[2 * e] = to_int(g.cap_up()[static_cast<Eigen::Index>(e)]) - x;
      cap[2 * e + 1] = to_int(g.cap_down()[static_cast<Eigen::Index>(e)]) + x;
      out[static_cast<std::size_t>(edge.tail)].push_back(static_cast<int>(2 * e));
      out[static_cast<std::size_t>(edge.head)].push_back(static_cast<int>(2 * e + 1));
    }
  }

  void push(int arc, std::int64_t amount) {
    cap[static_cast<std::size_t>(arc)] -= amount;
    cap[static_cast<std::size_t>(arc ^ 1)] += amount;
  }

  FlowVector flow(const Graph& g) const {
    FlowVector f(g.m());
    for (Eigen::Index e = 0; e < g.m(); ++e) {
      f[e] = static_cast<double>(to_int(g.cap_up()[e]) - cap[static_cast<std::size_t>(2 * e)]);
    }
    return f;
  }

  std::vector<char> reachable(int a) const {
    std::vector<char> seen(out.size(), 0);
    std::vector<int> stack{a};
    seen[static_cast<std::size_t>(a)] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int arc : out[static_cast<std::size_t>(v)]) {
        const int w = to[static_cast<std::size_t>(arc)];
        if (cap[static_cast<std::size_t>(arc)] > 0 && !seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          stack.push_back(w);
        }
      }
    }
    return seen;
  }
};

void check_integral_start(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f, int a, int b) {
  if (!g.is_integral()) throw ContractError("combinatorial routines need integral capacities");
  if (f.size() != g.m()) throw DimensionError("flow length differs from edge count");
  for (Eigen::Index e = 0; e < f.size(); ++e) {
    if (std::abs(f[e] - std::round(f[e])) > kIntegralTol) throw ContractError("starting flow is not integral");
  }
  if (!is_feasible_flow(g, f, a, b)) throw ContractError("starting flow is infeasible");
}

}  // namespace

double flow_value(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f, int b) {
  return apply_incidence_transpose(g, f)[b];
}

bool is_feasible_flow(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f, int a, int b, double tol) {
  if (f.size() != g.m()) throw DimensionError("flow length differs from edge count");
  if ((f.array() > g.cap_up().array() + tol).any() || (f.array() < -g.cap_down().array() - tol).any()) return false;
  const DemandVector d = apply_incidence_transpose(g, f);
  for (int v = 0; v < g.n(); ++v) {
    if (v == a || v == b) continue;
    if (std::abs(d[v]) > tol) return false;
  }
  return std::abs(d[a] + d[b]) <= tol;
}

FlowVector round_to_integral(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f, int a, int b) {
  check_terminals(g, a, b);
  if (!g.is_integral()) throw ContractError("rounding needs integral capacities");
  if (!is_feasible_flow(g, f, a, b, 1e-7)) throw ContractError("rounding needs a feasible flow");
  FlowVector x = f;
  auto fractional = [&](Eigen::Index e) { return std::abs(x[e] - std::round(x[e])) > kIntegralTol; };
  for (Eigen::Index e = 0; e < x.size(); ++e) {
    if (!fractional(e)) x[e] = std::round(x[e]);
  }

  // (edge, +1 when traversed tail -> head)
  struct Step {
    int edge;
    int dir;
  };
  for (Eigen::Index round = 0; round <= g.m(); ++round) {
    std::vector<std::vector<int>> incident(static_cast<std::size_t>(g.n()));
    int first = -1;
    for (Eigen::Index e = 0; e < g.m(); ++e) {
      if (!fractional(e)) continue;
      if (first < 0) first = static_cast<int>(e);
      incident[static_cast<std::size_t>(g.edge(e).tail)].push_back(static_cast<int>(e));
      incident[static_cast<std::size_t>(g.edge(e).head)].push_back(static_cast<int>(e));
    }
    if (first < 0) return x;

    // Grow a walk in both directions from the lowest fractional edge until it
    // closes a cycle or both ends sit on terminals. Interior vertices conserve
    // integral net flow, so each has a second fractional edge to continue on.
    std::deque<int> verts{g.edge(first).tail, g.edge(first).head};
    std::deque<Step> steps{{first, 1}};
    std::vector<char> used(static_cast<std::size_t>(g.m()), 0);
    used[static_cast<std::size_t>(first)] = 1;
    constexpr int kUnseen = std::numeric_limits<int>::min();  // pos goes negative as the walk grows backward
    std::vector<int> pos(static_cast<std::size_t>(g.n()), kUnseen);
    pos[static_cast<std::size_t>(verts[0])] = 0;
    pos[static_cast<std::size_t>(verts[1])] = 1;
    int offset = 0;  // pos stores index + offset so prepending stays O(1)
    std::vector<Step> cycle;
    bool closed = false;

    auto extend = [&](bool forward) {
      for (;;) {
        const int v = forward ? verts.back() : verts.front();
        int next_edge = -1;
        for (int e : incident[static_cast<std::size_t>(v)]) {
          if (!used[static_cast<std::size_t>(e)]) {
            next_edge = e;
            break;
          }
        }
        if (next_edge < 0) {
          if (v != a && v != b) throw ContractError("rounding found a non-conserving vertex");
          return;
        }
        used[static_cast<std::size_t>(next_edge)] = 1;
        const Edge& edge = g.edge(next_edge);
        const int w = edge.tail == v ? edge.head : edge.tail;
        // Direction as traversed along the walk's forward orientation.
        const int dir = forward ? (edge.tail == v ? 1 : -1) : (edge.head == v ? 1 : -1);
        const int at = pos[static_cast<std::size_t>(w)];
        if (at != kUnseen) {
          const std::size_t idx = static_cast<std::size_t>(at - offset);
          if (forward) {
            cycle.assign(steps.begin() + static_cast<std::ptrdiff_t>(idx), steps.end());
            cycle.push_back({next_edge, dir});
          } else {
            cycle.push_back({next_edge, dir});
            cycle.insert(cycle.end(), steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(idx));
          }
          closed = true;
          return;
        }
        if (forward) {
          verts.push_back(w);
          steps.push_back({next_edge, dir});
          pos[static_cast<std::size_t>(w)] = static_cast<int>(verts.size()) - 1 + offset;
        } else {
          verts.push_front(w);
          steps.push_front({next_edge, dir});
          --offset;
          pos[static_cast<std::size_t>(w)] = offset;
        }
      }
    };
    extend(true);
    if (!closed) extend(false);

    std::vector<Step> route;
    if (closed) {
      route = std::move(cycle);
      // Orient so that the lowest-id edge is pushed tail -> head.
      const auto lowest = std::min_element(route.begin(), route.end(),
                                           [](const Step& l, const Step& r) { return l.edge < r.edge; });
      if (lowest->dir < 0) {
        for (Step& s : route) s.dir = -s.dir;
      }
    } else {
      route.assign(steps.begin(), steps.end());
      // Push toward the sink so the value never drops.
      if (verts.front() != a) {
        for (Step& s : route) s.dir = -s.dir;
      }
    }

    double amount = std::numeric_limits<double>::infinity();
    int limiting = -1;
    for (const Step& s : route) {
      const double v = x[s.edge];
      const double room = s.dir > 0 ? std::ceil(v) - v : v - std::floor(v);
      if (room < amount) {
        amount = room;
        limiting = s.edge;
      }
    }
    for (const Step& s : route) {
      x[s.edge] += s.dir * amount;
      if (!fractional(s.edge)) x[s.edge] = std::round(x[s.edge]);
    }
    x[limiting] = std::round(x[limiting]);
  }
  throw ContractError("rounding did not terminate within m rounds");
}

AugmentingResult augmenting_paths(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& start, int a, int b,
                                  std::optional<std::int64_t> limit) {
  check_terminals(g, a, b);
  check_integral_start(g, start, a, b);
  Residual res(g, start);
  AugmentingResult out;
  out.value = to_int(flow_value(g, start, b));
  std::vector<int> pred(static_cast<std::size_t>(g.n()));
  for (;;) {
    if (limit && out.value >= *limit) break;
    std::fill(pred.begin(), pred.end(), -1);
    std::deque<int> queue{a};
    pred[static_cast<std::size_t>(a)] = -2;
    while (!queue.empty() && pred[static_cast<std::size_t>(b)] == -1) {
      const int v = queue.front();
      queue.pop_front();
      for (int arc : res.out[static_cast<std::size_t>(v)]) {
        const int w = res.to[static_cast<std::size_t>(arc)];
        if (res.cap[static_cast<std::size_t>(arc)] > 0 && pred[static_cast<std::size_t>(w)] == -1) {
          pred[static_cast<std::size_t>(w)] = arc;
          queue.push_back(w);
        }
      }
    }
    if (pred[static_cast<std::size_t>(b)] == -1) {
      out.exhausted = true;
      break;
    }
    std::int64_t bottleneck = limit ? *limit - out.value : std::numeric_limits<std::int64_t>::max();
    for (int v = b; v != a;) {
      const int arc = pred[static_cast<std::size_t>(v)];
      bottleneck = std::min(bottleneck, res.cap[static_cast<std::size_t>(arc)]);
      v = res.to[static_cast<std::size_t>(arc ^ 1)];
    }
    for (int v = b; v != a;) {
      const int arc = pred[static_cast<std::size_t>(v)];
      res.push(arc, bottleneck);
      v = res.to[static_cast<std::size_t>(arc ^ 1)];
    }
    out.value += bottleneck;
    ++out.augmentations;
  }
  out.flow = res.flow(g);
  out.source_side = res.reachable(a);
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    const bool tail_in = out.source_side[static_cast<std::size_t>(g.edge(e).tail)];
    const bool head_in = out.source_side[static_cast<std::size_t>(g.edge(e).head)];
    if (tail_in && !head_in) out.cut_capacity += to_int(g.cap_up()[e]);
    if (head_in && !tail_in) out.cut_capacity += to_int(g.cap_down()[e]);
  }
  return out;
}

MaxflowResult reference_maxflow(const Graph& g, int a, int b) {
  check_terminals(g, a, b);
  if (!g.is_integral()) throw ContractError("reference max flow needs integral capacities");
  Residual res(g, FlowVector::Zero(g.m()));
  const auto n = static_cast<std::size_t>(g.n());
  std::vector<int> level(n);
  std::vector<std::size_t> next(n);
  MaxflowResult out;

  auto bfs = [&] {
    std::fill(level.begin(), level.end(), -1);
    std::deque<int> queue{a};
    level[static_cast<std::size_t>(a)] = 0;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int arc : res.out[static_cast<std::size_t>(v)]) {
        const int w = res.to[static_cast<std::size_t>(arc)];
        if (res.cap[static_cast<std::size_t>(arc)] > 0 && level[static_cast<std::size_t>(w)] < 0) {
          level[static_cast<std::size_t>(w)] = level[static_cast<std::size_t>(v)] + 1;
          queue.push_back(w);
        }
      }
    }
    return level[static_cast<std::size_t>(b)] >= 0;
  };
  // Blocking-flow DFS along strictly increasing levels.
  auto dfs = [&](auto&& self, int v, std::int64_t pushed) -> std::int64_t {
    if (v == b) return pushed;
    auto& arcs = res.out[static_cast<std::size_t>(v)];
    for (std::size_t& i = next[static_cast<std::size_t>(v)]; i < arcs.size(); ++i) {
      const int arc = arcs[i];
      const int w = res.to[static_cast<std::size_t>(arc)];
      const std::int64_t room = res.cap[static_cast<std::size_t>(arc)];
      if (room <= 0 || level[static_cast<std::size_t>(w)] != level[static_cast<std::size_t>(v)] + 1) continue;
      const std::int64_t got = self(self, w, std::min(pushed, room));
      if (got > 0) {
        res.push(arc, got);
        return got;
      }
    }
    return 0;
  };
  while (bfs()) {
    std::fill(next.begin(), next.end(), 0);
    while (const std::int64_t got = dfs(dfs, a, std::numeric_limits<std::int64_t>::max())) out.value += got;
  }
  out.flow = res.flow(g);
  return out;
}

}  // namespace divflow
