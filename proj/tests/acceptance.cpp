// One pass/fail line per acceptance criterion. Tolerances are pinned below.

#include "divflow/barrier.hpp"
#include "divflow/combinatorial.hpp"
#include "divflow/driver.hpp"
#include "divflow/graph.hpp"
#include "divflow/ipm.hpp"
#include "divflow/refinement.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace divflow;
using testing::uniform;

constexpr int kSweepInstances = 200;
constexpr double kSweepSeconds = 300.0;
constexpr double kPhiSlack = 1e-12;
constexpr int kSandwichDraws = 10'000;
constexpr double kProgressSlack = 1e-12;
constexpr double kCentralityTol = 1e-6;
constexpr double kRecenterGapTol = 1e-6;
constexpr Eigen::Index kIndependentCheckEdges = 40;
constexpr double kOracleGapTol = 1e-6;
constexpr double kDecayTol = 1e-9;
constexpr double kStepLawSlack = 1.01;
constexpr double kFiniteDiffTol = 1e-6;

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared exactness sweep (criteria 1, 5, 6, 10).

struct SweepRun {
  Instance instance;
  RunReport report;
  std::int64_t preconditioned_optimum = 0;
};

struct Sweep {
  std::vector<SweepRun> runs;
  double seconds = 0.0;
  std::string error;
};

const Sweep& sweep() {
  static const Sweep result = [] {
    Sweep s;
    RunConfig cfg;
    cfg.ipm.keep_diagnostics = false;
    cfg.ipm.independent_check_edges = kIndependentCheckEdges;
    cfg.verify = true;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < kSweepInstances; ++i) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(i));
      const int n = 4 + static_cast<int>(rng() % 27);
      const int m = std::min(80, n - 1 + static_cast<int>(rng() % 60));
      const int U = 1 + static_cast<int>(rng() % 10);
      SweepRun run;
      run.instance = random_instance(10'000 + static_cast<std::uint64_t>(i), n, m, U, i % 2 == 1);
      const Instance& inst = run.instance;
      try {
        run.report = maxflow_ipm(inst.graph, inst.source, inst.sink, cfg);
      } catch (const std::exception& e) {
        s.error = fmt("instance %d threw: %s", i, e.what());
        break;
      }
      const UndirectedReduction red = reduce_directed_to_undirected(inst.graph, inst.source, inst.sink);
      run.preconditioned_optimum =
          reference_maxflow(precondition(red.graph, inst.source, inst.sink), inst.source, inst.sink).value;
      s.runs.push_back(std::move(run));
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
  }();
  return result;
}

Verdict criterion_exactness() {
  const Sweep& s = sweep();
  int matched = 0;
  int directed = 0;
  for (const SweepRun& r : s.runs) {
    if (r.report.reference_value && r.report.value == *r.report.reference_value) ++matched;
    if (!r.instance.graph.is_undirected()) ++directed;
  }
  Verdict v;
  v.pass = s.error.empty() && matched == kSweepInstances && s.seconds < kSweepSeconds;
  v.detail = fmt("%d/%d values equal Dinic (%d directed), %.1f s (limit %.0f s)", matched, kSweepInstances, directed,
                 s.seconds, kSweepSeconds);
  if (!s.error.empty()) v.detail += "; " + s.error;
  return v;
}

std::map<std::string, CheckSummary> merged_checks() {
  std::map<std::string, CheckSummary> total;
  for (const SweepRun& r : sweep().runs) {
    for (const auto& [name, c] : r.report.checks) {
      CheckSummary& t = total[name];
      if (t.evaluated == 0 || c.worst_ratio > t.worst_ratio) {
        t.worst_ratio = c.worst_ratio;
        t.worst_measured = c.worst_measured;
        t.worst_bound = c.worst_bound;
      }
      t.evaluated += c.evaluated;
      t.violations += c.violations;
    }
  }
  return total;
}

Verdict criterion_step_bounds() {
  static const char* kRequired[] = {"divergence",    "congestion",  "step_magnitude",  "mu_l1",
                                    "nu_nonnegative", "nu_one_sided", "weights_l1"};
  const auto total = merged_checks();
  Verdict v;
  long steps = 0;
  std::ostringstream margins;
  for (const char* name : kRequired) {
    const auto it = total.find(name);
    if (it == total.end() || it->second.evaluated == 0) {
      v.pass = false;
      margins << " " << name << "=missing";
      continue;
    }
    steps = std::max(steps, it->second.evaluated);
    if (it->second.violations != 0) v.pass = false;
    margins << " " << name << "=" << fmt("%.3g", it->second.worst_ratio);
    if (it->second.violations != 0) margins << "(" << it->second.violations << " violations)";
  }
  for (const auto& [name, c] : total) {
    if (c.violations != 0) v.pass = false;
  }
  v.detail = fmt("%ld steps checked; worst measured/bound:", steps) + margins.str();
  return v;
}

Verdict criterion_centrality() {
  double centrality = 0.0;
  double gap = 0.0;
  int gap_instances = 0;
  for (const SweepRun& r : sweep().runs) {
    centrality = std::max(centrality, r.report.max_centrality);
    if (r.report.max_recenter_gap >= 0.0) {
      ++gap_instances;
      gap = std::max(gap, r.report.max_recenter_gap);
    }
  }
  Verdict v;
  v.pass = !sweep().runs.empty() && centrality <= kCentralityTol && gap_instances > 0 && gap <= kRecenterGapTol;
  v.detail = fmt("max residual after recenter %.2e (tol %.0e); independent recenter gap %.2e over %d instances "
                 "with m <= %ld (tol %.0e)",
                 centrality, kCentralityTol, gap, gap_instances, static_cast<long>(kIndependentCheckEdges),
                 kRecenterGapTol);
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 2: smoothed barrier inequalities on a grid.

Verdict criterion_phitilde() {
  long violations = 0;
  constexpr int kPoints = 1000;
  auto check = [&](bool ok) { violations += ok ? 0 : 1; };
  for (int i = 0; i < kPoints; ++i) {
    const double x = -50.0 + 100.0 * i / (kPoints - 1);
    const double y = std::abs(x);
    const double slack = kPhiSlack * std::max(1.0, x * x);
    const double d2 = phitilde_d2(x);
    check(d2 >= 0.5 - kPhiSlack && d2 <= 2.0 + kPhiSlack);
    const double up = phitilde_d1(y);
    check(up >= y / 2 - slack && up <= 2 * y + slack);
    const double down = phitilde_d1(-y);
    check(down <= -y / 2 + slack && down >= -2 * y - slack);
    const double val = phitilde(x);
    check(val >= x * x / 4 - slack && val <= x * x + slack);
  }
  return {violations == 0, fmt("%ld violations over %d grid points x 4 inequalities", violations, kPoints)};
}

// ---------------------------------------------------------------------------
// Criteria 3, 4, 7: refinement machinery.

SeparableConvexPiece phitilde_piece(double scale, double shift, PieceKind kind) {
  return {[scale, shift](double x) {
            const Jet<double> j = phitilde_jet(x - shift);
            return Jet<double>{scale * j.value, scale * j.d1, scale * j.d2};
          },
          scale, kind};
}

// q(x) = w+ phitilde(x/c+) + w- phitilde(-x/c-); curvature a = w+/c+^2 + w-/c-^2.
SeparableConvexPiece barrier_piece(double wu, double wd, double cu, double cd) {
  return {[=](double x) {
            const Jet<double> u = phitilde_jet(x / cu);
            const Jet<double> d = phitilde_jet(-x / cd);
            return Jet<double>{wu * u.value + wd * d.value, wu * u.d1 / cu - wd * d.d1 / cd,
                               wu * u.d2 / (cu * cu) + wd * d.d2 / (cd * cd)};
          },
          wu / (cu * cu) + wd / (cd * cd), PieceKind::kQuadratic};
}

// h(x) = c+^2 (phitilde(x/c+) + (c-/c+) phitilde(-x/c-)) with c+ <= c-; h(0) = h'(0) = 0.
SeparableConvexPiece step_power_piece(double cu, double cd) {
  return {[=](double x) {
            const Jet<double> u = phitilde_jet(x / cu);
            const Jet<double> d = phitilde_jet(-x / cd);
            return Jet<double>{cu * cu * u.value + cu * cd * d.value, cu * u.d1 - cu * d.d1,
                               u.d2 + (cu / cd) * d.d2};
          },
          1.0, PieceKind::kPower};
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

Verdict criterion_sandwiches() {
  std::mt19937_64 rng(303);
  long quad = 0;
  long power = 0;
  long base = 0;
  for (int i = 0; i < kSandwichDraws; ++i) {
    SeparableConvexPiece q;
    double a = 0.0;
    if (i % 2 == 0) {
      a = uniform(rng, 0.1, 10);
      q = phitilde_piece(a, uniform(rng, -1, 1), PieceKind::kQuadratic);
    } else {
      const double cu = uniform(rng, 0.5, 5);
      q = barrier_piece(uniform(rng, 0.5, 3), uniform(rng, 0.5, 3), cu, cu + uniform(rng, 0, 5));
      a = q.curvature;
    }
    const double x = uniform(rng, -20, 20);
    const double d = std::copysign(log_uniform(rng, 1e-2, 20), uniform(rng, -1, 1));
    if (!quadratic_sandwich(q, a / 4, 4 * a, x, d).holds()) ++quad;
  }
  for (int p : {2, 4, 8}) {
    for (int i = 0; i < kSandwichDraws; ++i) {
      SeparableConvexPiece h;
      double b = 1.0;
      if (i % 2 == 0) {
        b = uniform(rng, 0.2, 3);
        h = phitilde_piece(b, 0.0, PieceKind::kPower);
      } else {
        const double cu = uniform(rng, 0.5, 3);
        h = step_power_piece(cu, cu + uniform(rng, 0, 3));
      }
      // The step pieces have curvature in [1/2, 4].
      const double c1 = i % 2 == 0 ? b / 4 : 0.5;
      const double c2 = i % 2 == 0 ? 4 * b : 4.0;
      if (!power_sandwich(h, c1, c2, p, uniform(rng, -3, 3), uniform(rng, -3, 3)).holds()) ++power;
      const double x = uniform(rng, 0, 5);
      if (!power_increment_bounds(p, x, uniform(rng, -x, 5)).holds()) ++base;
    }
  }
  return {quad + power + base == 0,
          fmt("violations: quadratic %ld/%d, power %ld/%d, power-increment %ld/%d (p in {2,4,8})", quad,
              kSandwichDraws, power, 3 * kSandwichDraws, base, 3 * kSandwichDraws)};
}

struct RefinementCase {
  Graph graph;
  RefinementProblem problem;
};

RefinementCase random_refinement_case(std::mt19937_64& rng, int dim, int p, double W) {
  Graph g = testing::small_cycle_graph(rng, dim);
  std::vector<SeparableConvexPiece> qs;
  std::vector<SeparableConvexPiece> hs;
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    qs.push_back(phitilde_piece(uniform(rng, 0.2, 3), uniform(rng, -1, 1), PieceKind::kQuadratic));
    hs.push_back(phitilde_piece(uniform(rng, 0.2, 2), 0.0, PieceKind::kPower));
  }
  RefinementProblem prob;
  prob.space = std::make_shared<FlowSpace>(g);
  prob.demand = uniform(rng, 0.5, 3) * unit_demand(g, 0, g.n() - 1);
  prob.q = std::make_shared<PieceList>(std::move(qs), PieceKind::kQuadratic);
  prob.h = std::make_shared<PieceList>(std::move(hs), PieceKind::kPower);
  prob.p = p;
  prob.W = W;
  return {std::move(g), std::move(prob)};
}

double grid_optimum(const Graph& g, const DemandVector& demand, int dim,
                    const std::function<double(const FlowVector&)>& objective) {
  const testing::AffineFlows aff = testing::affine_flows(g, demand);
  return testing::grid_minimize([&](const Eigen::VectorXd& th) { return objective(aff.at(th)); }, dim).value;
}

Verdict criterion_refinement_progress() {
  constexpr int kRuns = 50;
  constexpr int kSweeps = 20;
  int good_runs = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  int max_edges = 0;
  for (int run = 0; run < kRuns; ++run) {
    std::mt19937_64 rng(400 + static_cast<std::uint64_t>(run));
    const int p = run % 2 == 0 ? 2 : 4;
    const RefinementCase c = random_refinement_case(rng, 1, p, uniform(rng, 0.1, 3));
    max_edges = std::max(max_edges, static_cast<int>(c.graph.m()));
    const double optimum = grid_optimum(c.graph, c.problem.demand, 1,
                                        [&](const FlowVector& x) { return c.problem.p_power_value(x); });
    std::vector<double> trace;
    RefinementOptions opt;
    opt.line_search = false;
    opt.newton_polish = false;
    opt.max_sweeps = kSweeps;
    opt.value_trace = &trace;
    reduce_to_2p(c.problem, 1e-12, opt);
    const double rate = std::ldexp(1.0, -22 * p);  // C1 / C2 = 2^{-16p} / 2^{6p}
    bool ok = trace.size() > 1;
    for (std::size_t k = 1; k < trace.size(); ++k) {
      const double excess = (trace[k] - optimum) - (1.0 - rate) * (trace[k - 1] - optimum);
      worst_excess = std::max(worst_excess, excess);
      if (excess > kProgressSlack) ok = false;
    }
    if (ok) ++good_runs;
  }
  return {good_runs == kRuns, fmt("%d/%d runs (<= %d edges, %d floor steps each) contract; worst excess %.2e "
                                  "(slack %.0e)",
                                  good_runs, kRuns, max_edges, kSweeps, worst_excess, kProgressSlack)};
}

Verdict criterion_oracles() {
  constexpr int kInstances = 100;
  double gap_oracle = 0.0;
  double gap_reduce = 0.0;
  double gap_norm = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    std::mt19937_64 rng(700 + static_cast<std::uint64_t>(i));
    const int dim = 1 + i % 2;
    {
      const Graph g = testing::small_cycle_graph(rng, dim);
      SmoothedInstance inst;
      inst.p = i % 3 == 0 ? 2 : 4;
      inst.g.resize(g.m());
      inst.r.resize(g.m());
      inst.b.resize(g.m());
      for (Eigen::Index e = 0; e < g.m(); ++e) {
        inst.g[e] = uniform(rng, -2, 2);
        inst.r[e] = uniform(rng, 0.05, 2);
        inst.b[e] = uniform(rng, 0, 1.5);
      }
      const FlowVector x = oracle_2p(g, inst, 1e-12);
      const double ref = grid_optimum(g, DemandVector::Zero(g.n()), dim,
                                      [&](const FlowVector& y) { return inst.value(y); });
      gap_oracle = std::max(gap_oracle, std::abs(inst.value(x) - ref));
    }
    const int p = i % 3 == 0 ? 2 : (i % 3 == 1 ? 4 : 8);
    const RefinementCase c = random_refinement_case(rng, dim, p, uniform(rng, 0.1, 5));
    RefinementReport rep;
    const FlowVector x = reduce_to_2p(c.problem, 1e-11, {}, &rep);
    const double ref_power = grid_optimum(c.graph, c.problem.demand, dim,
                                          [&](const FlowVector& y) { return c.problem.p_power_value(y); });
    gap_reduce = std::max(gap_reduce, std::abs(c.problem.p_power_value(x) - ref_power));
    const FlowVector y = solve_lp_norm(c.problem, 1e-12);
    const double ref_norm = grid_optimum(c.graph, c.problem.demand, dim,
                                         [&](const FlowVector& z) { return c.problem.norm_value(z); });
    gap_norm = std::max(gap_norm, std::abs(c.problem.norm_value(y) - ref_norm));
  }
  const double worst = std::max({gap_oracle, gap_reduce, gap_norm});
  return {worst <= kOracleGapTol,
          fmt("%d instances, max |gap|: oracle_2p %.1e, reduce_to_2p %.1e, solve_lp_norm %.1e (tol %.0e)",
              kInstances, gap_oracle, gap_reduce, gap_norm, kOracleGapTol)};
}

// ---------------------------------------------------------------------------
// Criterion 8: step-count law of the fixed profile.

Verdict criterion_step_law() {
  struct Tiny {
    const char* name;
    Graph graph;
    int a;
    int b;
  };
  const Eigen::VectorXd edge = Eigen::VectorXd::Constant(1, 3);  // cap 1 ends below the threshold
  const Eigen::Vector2d two(1, 1);
  const Eigen::Vector2d path(2, 3);
  const Eigen::Vector3d tri(1, 2, 1);
  std::vector<Tiny> cases;
  cases.push_back({"edge", Graph(2, {{0, 1}}, edge, edge), 0, 1});
  cases.push_back({"parallel", Graph(2, {{0, 1}, {0, 1}}, two, two), 0, 1});
  cases.push_back({"path", Graph(3, {{0, 1}, {1, 2}}, path, path), 0, 2});
  cases.push_back({"triangle", Graph(3, {{0, 1}, {1, 2}, {0, 2}}, tri, tri), 0, 2});

  RunConfig cfg;
  cfg.ipm.profile = DeltaProfile::kPaper;
  Verdict v;
  std::ostringstream out;
  for (const Tiny& t : cases) {
    auto g = std::make_shared<const Graph>(precondition(t.graph, t.a, t.b));
    const double target = static_cast<double>(reference_maxflow(*g, t.a, t.b).value);
    const PathRun run = run_central_path(g, t.a, t.b, target, cfg);
    const PathParameters& params = run.state.params;
    const double thr = params.threshold();
    const double bound = kStepLawSlack * cfg.ipm.paper_constant * thr * std::log(3.0 * params.m * params.U / thr);
    const double ratio = 1.0 - 1.0 / (cfg.ipm.paper_constant * thr);
    double worst = 0.0;
    for (std::size_t k = 1; k < run.diagnostics.size(); ++k) {
      const double got = run.diagnostics[k].residual_flow / run.diagnostics[k - 1].residual_flow;
      worst = std::max(worst, std::abs(got / ratio - 1.0));
    }
    long violations = 0;
    for (const auto& [name, c] : run.checks) violations += c.violations;
    const bool ok = run.completed && run.rejections == 0 && static_cast<double>(run.steps) <= bound &&
                    worst <= kDecayTol && run.diagnostics.size() > 1 && violations == 0;
    if (!ok) v.pass = false;
    out << fmt(" %s(m=%g): %ld steps <= %.0f, decay err %.1e%s;", t.name, params.m, run.steps, bound, worst,
               run.completed ? "" : (" FAILED " + run.failure).c_str());
  }
  v.detail = "fixed profile" + out.str();
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 9: analytic gradients against central differences.

double fd_error(const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& grad,
                const Eigen::VectorXd& x) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (fn(xp) - fn(xm)) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1.0, std::abs(grad[i])));
  }
  return worst;
}

Verdict criterion_gradients() {
  constexpr int kPoints = 500;
  std::mt19937_64 rng(909);
  double barrier = 0.0;
  double divergence = 0.0;
  double tval = 0.0;
  double smoothed = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const Instance inst = random_instance(5000 + static_cast<std::uint64_t>(i), 5, 8, 6, i % 2 == 0);
    const Graph& g = inst.graph;
    const Eigen::Index m = g.m();
    Weights w{Eigen::VectorXd(m), Eigen::VectorXd(m)};
    Eigen::VectorXd f(m);
    for (Eigen::Index e = 0; e < m; ++e) {
      w.up[e] = uniform(rng, 0.5, 3);
      w.down[e] = uniform(rng, 0.5, 3);
      // Strictly inside (-cap_down, cap_up) with slack at least a tenth of the span.
      const double lo = -g.cap_down()[e];
      const double hi = g.cap_up()[e];
      f[e] = uniform(rng, lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo));
    }
    barrier = std::max(barrier, fd_error([&](const Eigen::VectorXd& y) { return barrier_value(g, w, y); },
                                         barrier_gradient(g, w, f), f));

    const ResidualCaps caps = ResidualCaps::from_flow(g, f).normalized();
    const Weights wf = w.oriented(caps.sign);
    Eigen::VectorXd step(m);
    for (Eigen::Index e = 0; e < m; ++e) step[e] = uniform(rng, -0.5, 0.5) * caps.up[e];
    divergence = std::max(divergence, fd_error([&](const Eigen::VectorXd& y) {
      return divergence_tilde(wf, caps, y).value;
    }, divergence_tilde(wf, caps, step).gradient, step));
    const ObjectiveParams obj{0.1, 2 * (1 + i % 4), uniform(rng, 0.5, 5)};
    tval = std::max(tval, fd_error([&](const Eigen::VectorXd& y) { return val_objectives(wf, caps, obj, y).tval; },
                                   val_objectives(wf, caps, obj, step).grad_tval, step));

    SmoothedInstance sm;
    sm.p = 2 + i % 3;
    sm.g.resize(m);
    sm.r.resize(m);
    sm.b.resize(m);
    Eigen::VectorXd x(m);
    for (Eigen::Index e = 0; e < m; ++e) {
      sm.g[e] = uniform(rng, -2, 2);
      sm.r[e] = uniform(rng, 0.05, 2);
      sm.b[e] = uniform(rng, 0, 1.5);
      x[e] = uniform(rng, -2, 2);
    }
    smoothed = std::max(smoothed, fd_error([&](const Eigen::VectorXd& y) { return sm.value(y); }, sm.gradient(x), x));
  }
  const double worst = std::max({barrier, divergence, tval, smoothed});
  return {worst <= kFiniteDiffTol,
          fmt("%d points, max relative error: barrier %.1e, divergence %.1e, extended objective %.1e, smoothed "
              "%.1e (tol %.0e)",
              kPoints, barrier, divergence, tval, smoothed, kFiniteDiffTol)};
}

// ---------------------------------------------------------------------------
// Criterion 10: preconditioning and the directed reduction.

Verdict criterion_preconditioning() {
  constexpr int kInstances = 100;
  int shift_ok = 0;
  int roundtrip_ok = 0;
  for (int i = 0; i < kInstances; ++i) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(1000 + i));
    const int n = 3 + static_cast<int>(rng() % 20);
    const int m = std::min(60, n - 1 + static_cast<int>(rng() % 40));
    const Instance inst = random_instance(2000 + static_cast<std::uint64_t>(i), n, m, 1 + static_cast<int>(rng() % 10),
                                          i % 2 == 0);
    const std::int64_t direct = reference_maxflow(inst.graph, inst.source, inst.sink).value;
    const UndirectedReduction red = reduce_directed_to_undirected(inst.graph, inst.source, inst.sink);
    const std::int64_t reduced = reference_maxflow(red.graph, inst.source, inst.sink).value;
    if ((static_cast<double>(reduced) - red.value_offset) / red.value_scale == static_cast<double>(direct)) {
      ++roundtrip_ok;
    }
    const Graph pre = precondition(red.graph, inst.source, inst.sink);
    const double shift = 2.0 * static_cast<double>(red.graph.m()) * red.graph.max_capacity();
    if (static_cast<double>(reference_maxflow(pre, inst.source, inst.sink).value - reduced) == shift) ++shift_ok;
  }

  // The residual bound presumes a target at most the optimum, so overestimating
  // probes are excluded; a feasible probe tripping it is a violation.
  long feasible_trips = 0;
  for (const SweepRun& r : sweep().runs) {
    for (const ProbeRecord& p : r.report.probes) {
      if (p.guess <= r.preconditioned_optimum && p.failure.find("preconditioning") != std::string::npos) {
        ++feasible_trips;
      }
    }
  }
  const auto total = merged_checks();
  const auto it = total.find("precond_residual");
  const long evaluated = it == total.end() ? 0 : it->second.evaluated;
  const long violations = (it == total.end() ? 0 : it->second.violations) + feasible_trips;
  Verdict v;
  v.pass = shift_ok == kInstances && roundtrip_ok == kInstances && evaluated > 0 && violations == 0;
  v.detail = fmt("shift 2mU exact %d/%d, directed round-trip exact %d/%d, residual check %ld steps with %ld "
                 "violations",
                 shift_ok, kInstances, roundtrip_ok, kInstances, evaluated, violations);
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Verdict (*run)();
  };
  const Criterion criteria[] = {
      {1, "exactness sweep", criterion_exactness},
      {2, "smoothed barrier inequalities", criterion_phitilde},
      {3, "sandwich inequalities", criterion_sandwiches},
      {4, "refinement progress", criterion_refinement_progress},
      {5, "per-step bounds", criterion_step_bounds},
      {6, "centrality preservation", criterion_centrality},
      {7, "oracle equivalence", criterion_oracles},
      {8, "iteration-count law", criterion_step_law},
      {9, "gradient hygiene", criterion_gradients},
      {10, "preconditioning and reduction", criterion_preconditioning},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %d %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(),
                secs);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
