#include "divflow/driver.hpp"

#include "divflow/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace divflow {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void merge_checks(std::map<std::string, CheckSummary>& into, const std::map<std::string, CheckSummary>& from) {
  for (const auto& [name, s] : from) {
    CheckSummary& t = into[name];
    t.evaluated += s.evaluated;
    t.violations += s.violations;
    if (s.evaluated > 0 && (t.evaluated == s.evaluated || s.worst_ratio > t.worst_ratio)) {
      t.worst_ratio = s.worst_ratio;
      t.worst_measured = s.worst_measured;
      t.worst_bound = s.worst_bound;
    }
  }
}

void record(std::map<std::string, CheckSummary>& checks, const LemmaCheck& c) {
  CheckSummary& s = checks[c.name];
  // Zero bounds are exact identities; report the raw measurement as the ratio.
  const double ratio = c.bound > 0.0 ? c.measured / c.bound : (c.measured > 0.0 ? c.measured : 0.0);
  if (s.evaluated == 0 || ratio > s.worst_ratio) {
    s.worst_ratio = ratio;
    s.worst_measured = c.measured;
    s.worst_bound = c.bound;
  }
  ++s.evaluated;
  if (!c.pass) ++s.violations;
}

bool reachable(const Graph& g, int a, int b) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.n()));
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    const Edge& ed = g.edge(e);
    if (g.cap_up()[e] > 0.0) adj[static_cast<std::size_t>(ed.tail)].push_back(ed.head);
    if (g.cap_down()[e] > 0.0) adj[static_cast<std::size_t>(ed.head)].push_back(ed.tail);
  }
  std::vector<char> seen(static_cast<std::size_t>(g.n()), 0);
  std::vector<int> stack{a};
  seen[static_cast<std::size_t>(a)] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        stack.push_back(w);
      }
    }
  }
  return seen[static_cast<std::size_t>(b)] != 0;
}

// Capacity leaving a or entering b, whichever is smaller.
double terminal_capacity(const Graph& g, int a, int b) {
  double out_a = 0.0;
  double in_b = 0.0;
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    const Edge& ed = g.edge(e);
    if (ed.tail == a) out_a += g.cap_up()[e];
    if (ed.head == a) out_a += g.cap_down()[e];
    if (ed.head == b) in_b += g.cap_up()[e];
    if (ed.tail == b) in_b += g.cap_down()[e];
  }
  return std::min(out_a, in_b);
}

}  // namespace

void RunConfig::validate() const {
  const IpmOptions& o = ipm;
  if (!(o.paper_constant > 0.0 && o.adaptive_start > 0.0 && o.adaptive_ceiling > 0.0)) {
    throw DomainError("step constants must be positive");
  }
  if (!(o.congestion_limit > 0.0 && o.center_tol > 0.0 && o.oracle_tol > 0.0)) {
    throw DomainError("tolerances must be positive");
  }
  if (o.max_recenter_iterations < 1 || o.max_steps < 1) throw DomainError("iteration caps must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("extension radius must lie in (0, 1)");
  if (p_override && (*p_override < 2 || *p_override % 2 != 0)) throw DomainError("p must be an even integer >= 2");
  if (granularity < 1) throw DomainError("search granularity must be at least 1");
}

PathParameters RunConfig::parameters(const Graph& preconditioned) const {
  PathParameters params = PathParameters::for_graph(preconditioned, eta_override, c0);
  if (p_override) params.p = *p_override;
  params.epsilon = epsilon;
  return params;
}

PathRun run_central_path(std::shared_ptr<const Graph> preconditioned, int source, int sink, double target,
                         const RunConfig& config) {
  config.validate();
  const auto started = Clock::now();
  const IpmOptions& opt = config.ipm;
  const Graph& g = *preconditioned;
  const PathParameters params = config.parameters(g);
  PathRun run;
  run.state = initial_state(std::move(preconditioned), source, sink, target, params);
  CentralPathState& state = run.state;
  FlowSpace space(g);
  const bool paper = opt.profile == DeltaProfile::kPaper;
  const double threshold = params.threshold();
  // delta <= F_t / 2 keeps every step well inside the remaining flow.
  const double min_constant = 2.0 / threshold;
  // Aim the next step at half the congestion limit; congestion scales about linearly in delta.
  const double aim = opt.congestion_limit / 2.0;
  double constant = paper ? opt.paper_constant : std::max(opt.adaptive_start, min_constant);

  auto fail = [&](std::string why) {
    run.failure = std::move(why);
    run.ipm_ms = elapsed_ms(started);
    return run;
  };

  while (state.residual_flow() >= threshold) {
    if (run.steps >= opt.max_steps) return fail("step cap reached");
    AugmentResult result;
    try {
      result = augment(space, state, constant, opt);
    } catch (const StepRejected& e) {
      ++run.rejections;
      if (paper) return fail(std::string("step rejected in the fixed profile: ") + e.what());
      constant *= std::max(2.0, e.congestion() / aim);
      if (constant > opt.adaptive_ceiling) return fail("step rejection cascade");
      continue;
    } catch (const Error& e) {
      ++run.rejections;
      if (paper) return fail(std::string("step solver failed: ") + e.what());
      constant *= 2.0;
      if (constant > opt.adaptive_ceiling) return fail(std::string("step solver failed: ") + e.what());
      continue;
    }
    StepDiagnostics& diag = result.diagnostics;
    diag.step = run.steps;
    diag.delta_ratio = opt.paper_constant / constant;
    run.oracle_calls += diag.oracle_calls;
    run.linear_solves += diag.linear_solves;

    const std::vector<LemmaCheck> checks = check_step_invariants(state, result);
    for (const LemmaCheck& c : checks) {
      if (c.name == "precond_residual" && !c.pass) {
        return fail("preconditioning residual below F_t/(21m): target exceeds the optimum");
      }
    }
    if (config.checks != CheckLevel::kOff) {
      for (const LemmaCheck& c : checks) {
        if (config.checks == CheckLevel::kAssert && !c.pass) {
          throw AlgorithmFailure("invariant " + c.name + " violated at step " + std::to_string(run.steps));
        }
        record(run.checks, c);
      }
    }

    if (g.m() <= opt.independent_check_edges) {
      Weights w_new{state.w.up + result.nu.up, state.w.down + result.nu.down};
      try {
        const FlowVector reference = independent_central_point(g, source, sink, w_new, state.f, state.t,
                                                               state.t + result.delta);
        diag.recenter_gap = (state.f + result.step - reference).norm() / (1.0 + state.f.norm());
      } catch (const ConvergenceError&) {
        diag.recenter_gap = std::numeric_limits<double>::infinity();  // reported, never hidden
      }
      run.max_recenter_gap = std::max(run.max_recenter_gap, diag.recenter_gap);
    }

    apply_step(state, result);
    diag.centrality_before =
        centrality_residual(g, state.w, state.f, state.t, source, sink, &space.projector());
    try {
      const RecenterReport rep = recenter(space, state, opt.center_tol, opt.max_recenter_iterations);
      diag.recenter_iterations = rep.iterations;
      diag.centrality_after = rep.residual;
    } catch (const ConvergenceError& e) {
      return fail(std::string("recentering failed: ") + e.what());
    }
    run.max_post_step_centrality = std::max(run.max_post_step_centrality, diag.centrality_before);
    run.max_centrality = std::max(run.max_centrality, diag.centrality_after);
    ++run.steps;
    if (opt.keep_diagnostics) run.diagnostics.push_back(diag);
    if (!paper) constant = std::max(constant * std::max(0.5, diag.max_congestion / aim), min_constant);
  }
  run.completed = true;
  run.ipm_ms = elapsed_ms(started);
  return run;
}

RunReport maxflow_ipm(const Graph& g, int source, int sink, const RunConfig& config) {
  config.validate();
  if (!g.is_integral()) throw ContractError("max flow needs integral capacities");
  if (source == sink) throw DomainError("source equals sink");
  RunReport report;
  report.n = g.n();
  report.m = g.m();

  const UndirectedReduction reduction = reduce_directed_to_undirected(g, source, sink);
  const Graph& undirected = reduction.graph;
  report.U = undirected.max_capacity();
  auto map_value = [&](std::int64_t undirected_value) {
    const double v = (static_cast<double>(undirected_value) - reduction.value_offset) / reduction.value_scale;
    if (std::abs(v - std::round(v)) > 1e-9) throw AlgorithmFailure("reduced value does not map to an integer");
    return static_cast<std::int64_t>(std::llround(v));
  };

  if (undirected.m() == 0 || !reachable(undirected, source, sink)) {
    report.value = 0;
    report.flow = FlowVector::Zero(undirected.m());
  } else {
    auto working = std::make_shared<const Graph>(precondition(undirected, source, sink));
    const Graph& gp = *working;
    report.m_preconditioned = gp.m();
    const PathParameters params = config.parameters(gp);
    report.eta = params.eta;
    report.W = params.W;
    report.p = params.p;
    std::int64_t offset = 0;
    for (int e : gp.precond_edge_ids()) offset += static_cast<std::int64_t>(std::llround(gp.cap_up()[e]));

    struct Outcome {
      bool ok = false;
      AugmentingResult paths;
    };
    auto probe = [&](std::int64_t guess, std::optional<std::int64_t> limit) {
      ProbeRecord rec;
      rec.guess = guess;
      PathRun run = run_central_path(working, source, sink, static_cast<double>(guess), config);
      report.ipm_ms += run.ipm_ms;
      report.steps += run.steps;
      report.rejections += run.rejections;
      report.oracle_calls += run.oracle_calls;
      report.linear_solves += run.linear_solves;
      merge_checks(report.checks, run.checks);
      report.max_recenter_gap = std::max(report.max_recenter_gap, run.max_recenter_gap);
      report.max_centrality = std::max(report.max_centrality, run.max_centrality);
      if (config.ipm.keep_diagnostics) {
        report.diagnostics.insert(report.diagnostics.end(), run.diagnostics.begin(), run.diagnostics.end());
      }
      rec.ipm_completed = run.completed;
      rec.failure = run.failure;
      rec.steps = run.steps;
      Outcome out;
      if (run.completed) {
        auto t0 = Clock::now();
        const FlowVector rounded = round_to_integral(gp, run.state.f, source, sink);
        report.round_ms += elapsed_ms(t0);
        t0 = Clock::now();
        out.paths = augmenting_paths(gp, rounded, source, sink, limit);
        report.ap_ms += elapsed_ms(t0);
        out.ok = true;
        rec.value = out.paths.value;
        rec.exhausted = out.paths.exhausted;
        rec.augmentations = out.paths.augmentations;
      }
      report.probes.push_back(rec);
      return out;
    };

    // lo is always attainable: the preconditioning edges alone carry it.
    std::int64_t lo = offset;
    std::int64_t hi = offset + static_cast<std::int64_t>(std::llround(terminal_capacity(undirected, source, sink)));
    std::optional<AugmentingResult> done;
    std::optional<AugmentingResult> at_lo;
    while (!done && hi - lo >= (config.exhaustive_search ? config.granularity : 1)) {
      const std::int64_t guess = lo + (hi - lo + 1) / 2;
      Outcome o = probe(guess, config.exhaustive_search ? std::optional<std::int64_t>(guess) : std::nullopt);
      if (!o.ok) {
        hi = guess - 1;
      } else if (o.paths.exhausted) {
        done = std::move(o.paths);
      } else {
        lo = guess;
        at_lo = std::move(o.paths);
      }
    }
    if (!done) {
      if (at_lo) {
        const auto t0 = Clock::now();
        done = augmenting_paths(gp, at_lo->flow, source, sink);
        report.ap_ms += elapsed_ms(t0);
        report.augmentations += done->augmentations;
      } else {
        Outcome o = probe(lo, std::nullopt);
        if (!o.ok) throw AlgorithmFailure("central path failed even at the guaranteed lower bound: " +
                                          report.probes.back().failure);
        done = std::move(o.paths);
      }
    }
    if (!done->exhausted || done->cut_capacity != done->value) {
      throw AlgorithmFailure("augmenting paths ended without a matching cut certificate");
    }
    for (const ProbeRecord& r : report.probes) report.augmentations += r.augmentations;
    report.cut_certificate = done->cut_capacity - offset;
    report.value = map_value(done->value - offset);
    report.flow = done->flow.head(undirected.m());
  }

  const bool verify = config.verify.value_or(g.m() <= 10'000);
  if (verify) {
    report.reference_value = reference_maxflow(g, source, sink).value;
    report.verified = *report.reference_value == report.value;
  }
  return report;
}

std::int64_t binary_search_value(const Graph& g, int source, int sink, const RunConfig& config) {
  return maxflow_ipm(g, source, sink, config).value;
}

}  // namespace divflow
