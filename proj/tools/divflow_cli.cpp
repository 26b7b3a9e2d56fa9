#include "divflow/combinatorial.hpp"
#include "divflow/driver.hpp"
#include "divflow/errors.hpp"
#include "divflow/graph.hpp"
#include "divflow/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace divflow;

constexpr int kExitParse = 2;
constexpr int kExitSolver = 3;
constexpr int kExitMismatch = 4;

// Log level comes from the environment only; anything but "info" or "debug" is quiet.
bool verbose() {
  const char* level = std::getenv("DIVFLOW_LOG");
  return level != nullptr && (std::string(level) == "info" || std::string(level) == "debug");
}

struct SolverFlags {
  std::string profile = "adaptive";
  std::string checks = "record";
  double delta_constant = 1e5;
  double adaptive_start = 10.0;
  double epsilon = 0.1;
  double c0 = 1.0;
  double center_tol = 1e-10;
  double oracle_tol = 1e-12;
  std::optional<double> eta;
  std::optional<int> p;
  bool exhaustive = false;
  std::int64_t granularity = 1;
  bool verify = false;
  bool no_verify = false;

  void attach(CLI::App& app) {
    app.add_option("--delta-profile", profile, "Step-size profile")->check(CLI::IsMember({"paper", "adaptive"}));
    app.add_option("--delta-constant", delta_constant, "Fixed-profile step constant: delta = F_t / (C m^{1/2-eta})");
    app.add_option("--adaptive-start", adaptive_start, "Initial step constant of the adaptive profile");
    app.add_option("--epsilon", epsilon, "Radius of the exact region of the extended divergence");
    app.add_option("--c0", c0, "Constant standing in for the o(1) term of eta");
    app.add_option("--eta", eta, "Override the progress exponent eta");
    app.add_option("--p", p, "Override the norm exponent p (even)");
    app.add_option("--center-tol", center_tol, "Centrality residual after recentering");
    app.add_option("--oracle-tol", oracle_tol, "Additive tolerance of the step subproblem");
    app.add_option("--checks", checks, "Invariant checks")->check(CLI::IsMember({"off", "assert", "record"}));
    app.add_flag("--exhaustive-search", exhaustive, "Bisect with capped probes down to the granularity");
    app.add_option("--granularity", granularity, "Bisection width for --exhaustive-search");
    auto* on = app.add_flag("--verify", verify, "Cross-check against the reference solver");
    auto* off = app.add_flag("--no-verify", no_verify, "Skip the reference cross-check");
    on->excludes(off);
  }

  RunConfig config() const {
    RunConfig cfg;
    cfg.ipm.profile = profile == "paper" ? DeltaProfile::kPaper : DeltaProfile::kAdaptive;
    cfg.ipm.paper_constant = delta_constant;
    cfg.ipm.adaptive_start = adaptive_start;
    cfg.ipm.center_tol = center_tol;
    cfg.ipm.oracle_tol = oracle_tol;
    cfg.eta_override = eta;
    cfg.p_override = p;
    cfg.c0 = c0;
    cfg.epsilon = epsilon;
    cfg.checks = checks == "off" ? CheckLevel::kOff : checks == "assert" ? CheckLevel::kAssert : CheckLevel::kRecord;
    cfg.exhaustive_search = exhaustive;
    cfg.granularity = granularity;
    if (verify) cfg.verify = true;
    if (no_verify) cfg.verify = false;
    cfg.validate();
    return cfg;
  }
};

struct GenFlags {
  std::uint64_t seed = 1;
  int n = 10;
  int m = 20;
  int U = 5;
  bool undirected = false;

  void attach(CLI::App& app) {
    app.add_option("--seed", seed, "Generator seed");
    app.add_option("--n", n, "Vertex count")->check(CLI::Range(2, 1 << 20));
    app.add_option("--m", m, "Edge count")->check(CLI::Range(1, 1 << 24));
    app.add_option("--U", U, "Maximum capacity")->check(CLI::Range(1, 1 << 30));
    app.add_flag("--undirected", undirected, "Symmetric capacities");
  }

  Instance make() const { return random_instance(seed, n, m, U, !undirected); }
};

Instance read_instance(const std::string& path) {
  std::string text;
  if (path == "-") {
    text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  } else {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return parse_dimacs(text);
}

void print_flow(std::ostream& out, const Graph& g, const FlowVector& f, const std::string& note) {
  out << "c " << note << "\n";
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    out << "f " << g.edge(e).tail + 1 << ' ' << g.edge(e).head + 1 << ' ' << std::llround(f[e]) << "\n";
  }
}

// Runs fn(i) for i in [0, count) on up to jobs threads; results keep index order.
template <typename Result, typename Fn>
std::vector<Result> run_corpus(int count, int jobs, Fn fn) {
  std::vector<Result> results(static_cast<std::size_t>(count));
  const int workers = std::max(1, std::min(jobs, count));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += workers) results[static_cast<std::size_t>(i)] = fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

// Corpus instance i: sizes cycle through a small ladder, direction alternates.
Instance corpus_instance(std::uint64_t seed, int i) {
  static constexpr int kSizes[][3] = {{6, 12, 3}, {10, 24, 5}, {16, 40, 8}, {24, 60, 10}, {30, 80, 10}};
  const auto& s = kSizes[i % 5];
  return random_instance(seed + static_cast<std::uint64_t>(i), s[0], s[1], s[2], i % 2 == 0);
}

int cmd_solve(const std::string& input, const std::string& mode, const SolverFlags& flags, bool json,
              bool print, bool timings, const std::string& trace) {
  const Instance inst = read_instance(input);
  if (mode == "reference") {
    const MaxflowResult r = reference_maxflow(inst.graph, inst.source, inst.sink);
    std::cout << r.value << "\n";
    if (print) print_flow(std::cout, inst.graph, r.flow, "flow on the input graph");
    return 0;
  }
  RunConfig cfg = flags.config();
  if (!trace.empty()) cfg.ipm.keep_diagnostics = true;
  const RunReport report = maxflow_ipm(inst.graph, inst.source, inst.sink, cfg);
  if (verbose()) {
    for (const ProbeRecord& p : report.probes) {
      std::cerr << "probe guess=" << p.guess << " completed=" << p.ipm_completed << " steps=" << p.steps
                << " value=" << p.value << (p.failure.empty() ? "" : " failure=" + p.failure) << "\n";
    }
  }
  if (!trace.empty()) {
    std::ofstream out(trace);
    if (!out) throw ParseError(0, "cannot write " + trace);
    out << step_trace_jsonl(report.diagnostics);
  }
  if (json) {
    std::cout << report_json(report, {timings, print, 2});
  } else {
    std::cout << report.value << "\n";
    if (print) {
      const UndirectedReduction red = reduce_directed_to_undirected(inst.graph, inst.source, inst.sink);
      print_flow(std::cout, red.graph, report.flow, "flow on the undirected working instance");
    }
  }
  if (report.reference_value && !report.verified) {
    std::cerr << "value mismatch: ipm " << report.value << ", reference " << *report.reference_value << "\n";
    return kExitMismatch;
  }
  return 0;
}

int cmd_verify(const Instance& inst, const SolverFlags& flags) {
  RunConfig cfg = flags.config();
  cfg.verify = false;
  const RunReport report = maxflow_ipm(inst.graph, inst.source, inst.sink, cfg);
  const std::int64_t reference = reference_maxflow(inst.graph, inst.source, inst.sink).value;
  std::cout << "ipm " << report.value << " reference " << reference << " "
            << (report.value == reference ? "match" : "MISMATCH") << "\n";
  return report.value == reference ? 0 : kExitMismatch;
}

int cmd_check_lemmas(std::uint64_t seed, int count, int jobs, const SolverFlags& flags) {
  RunConfig cfg = flags.config();
  cfg.checks = CheckLevel::kRecord;
  cfg.ipm.keep_diagnostics = false;
  const auto reports = run_corpus<RunReport>(count, jobs, [&](int i) {
    const Instance inst = corpus_instance(seed, i);
    return maxflow_ipm(inst.graph, inst.source, inst.sink, cfg);
  });
  std::map<std::string, CheckSummary> total;
  long steps = 0;
  int mismatches = 0;
  double centrality = 0.0;
  for (const RunReport& r : reports) {
    steps += r.steps;
    centrality = std::max(centrality, r.max_centrality);
    if (r.reference_value && !r.verified) ++mismatches;
    for (const auto& [name, s] : r.checks) {
      CheckSummary& t = total[name];
      if (t.evaluated == 0 || s.worst_ratio > t.worst_ratio) {
        t.worst_ratio = s.worst_ratio;
        t.worst_measured = s.worst_measured;
        t.worst_bound = s.worst_bound;
      }
      t.evaluated += s.evaluated;
      t.violations += s.violations;
    }
  }
  long violations = 0;
  std::cout << std::left << std::setw(20) << "check" << std::right << std::setw(10) << "steps" << std::setw(12)
            << "violations" << std::setw(14) << "worst ratio" << "  status\n";
  for (const auto& [name, s] : total) {
    violations += s.violations;
    std::cout << std::left << std::setw(20) << name << std::right << std::setw(10) << s.evaluated << std::setw(12)
              << s.violations << std::setw(14) << std::setprecision(4) << s.worst_ratio << "  "
              << (s.violations == 0 ? "pass" : "FAIL") << "\n";
  }
  std::cout << "instances " << count << ", steps " << steps << ", max centrality " << std::setprecision(3)
            << centrality << ", value mismatches " << mismatches << "\n";
  if (mismatches > 0) return kExitMismatch;
  return violations == 0 ? 0 : kExitSolver;
}

int cmd_bench(std::uint64_t seed, int count, int jobs, const SolverFlags& flags) {
  RunConfig cfg = flags.config();
  cfg.verify = false;
  cfg.ipm.keep_diagnostics = false;
  static constexpr int kLadder[][3] = {{8, 16, 4}, {12, 30, 6}, {20, 50, 8}, {30, 80, 10}};
  struct Row {
    RunReport report;
    double reference_ms = 0.0;
  };
  std::cout << std::setw(5) << "n" << std::setw(6) << "m" << std::setw(7) << "m_pre" << std::setw(8) << "steps"
            << std::setw(8) << "probes" << std::setw(11) << "ipm_ms" << std::setw(10) << "round_ms" << std::setw(9)
            << "ap_ms" << std::setw(9) << "ref_ms\n";
  for (const auto& size : kLadder) {
    const auto rows = run_corpus<Row>(count, jobs, [&](int i) {
      const Instance inst = random_instance(seed + static_cast<std::uint64_t>(i), size[0], size[1], size[2], true);
      Row row;
      row.report = maxflow_ipm(inst.graph, inst.source, inst.sink, cfg);
      const auto t0 = std::chrono::steady_clock::now();
      reference_maxflow(inst.graph, inst.source, inst.sink);
      row.reference_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      return row;
    });
    for (const Row& row : rows) {
      const RunReport& r = row.report;
      std::cout << std::setw(5) << r.n << std::setw(6) << r.m << std::setw(7) << r.m_preconditioned << std::setw(8)
                << r.steps << std::setw(8) << r.probes.size() << std::fixed << std::setprecision(1) << std::setw(11)
                << r.ipm_ms << std::setw(10) << r.round_ms << std::setw(9) << r.ap_ms << std::setw(9)
                << row.reference_ms << std::defaultfloat << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact maximum flow by divergence-maximizing interior-point steps"};
  app.require_subcommand(1);

  SolverFlags solve_flags;
  std::string solve_input = "-";
  std::string mode = "ipm";
  bool json = false;
  bool print = false;
  bool timings = false;
  std::string trace;
  auto* solve = app.add_subcommand("solve", "Solve a DIMACS max-flow instance");
  solve->add_option("input", solve_input, "DIMACS file, or - for stdin");
  solve->add_option("--mode", mode, "Solver")->check(CLI::IsMember({"ipm", "reference"}));
  auto* json_opt = solve->add_flag("--json", json, "Print the run report as JSON");
  solve->add_flag("--print-flow", print, "Print the integral flow");
  solve->add_flag("--timings", timings, "Include wall-clock phases in the JSON report")->needs(json_opt);
  solve->add_option("--trace", trace, "Write per-step diagnostics as JSON lines");
  solve_flags.attach(*solve);

  SolverFlags verify_flags;
  GenFlags verify_gen;
  std::string verify_input;
  auto* verify = app.add_subcommand("verify", "Compare the interior-point and reference values");
  auto* verify_in = verify->add_option("input", verify_input, "DIMACS file, or - for stdin");
  verify_flags.attach(*verify);
  verify_gen.attach(*verify);
  verify_in->excludes(verify->get_option("--seed"));

  GenFlags gen_flags;
  auto* gen = app.add_subcommand("gen", "Emit a seeded random instance as DIMACS");
  gen_flags.attach(*gen);

  SolverFlags lemma_flags;
  std::uint64_t lemma_seed = 1;
  int lemma_count = 20;
  int lemma_jobs = 1;
  auto* lemmas = app.add_subcommand("check-lemmas", "Run the invariant suite on a seeded corpus");
  lemmas->add_option("--seed", lemma_seed, "Corpus seed");
  lemmas->add_option("--count", lemma_count, "Corpus size")->check(CLI::Range(1, 100000));
  lemmas->add_option("--jobs", lemma_jobs, "Worker threads")->check(CLI::Range(1, 256));
  lemma_flags.attach(*lemmas);

  SolverFlags bench_flags;
  std::uint64_t bench_seed = 1;
  int bench_count = 3;
  int bench_jobs = 1;
  auto* bench = app.add_subcommand("bench", "Timing table over a size ladder");
  bench->add_option("--seed", bench_seed, "Corpus seed");
  bench->add_option("--count", bench_count, "Instances per size")->check(CLI::Range(1, 100000));
  bench->add_option("--jobs", bench_jobs, "Worker threads")->check(CLI::Range(1, 256));
  bench_flags.attach(*bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_input, mode, solve_flags, json, print, timings, trace);
    if (verify->parsed()) {
      const Instance inst = verify_input.empty() ? verify_gen.make() : read_instance(verify_input);
      return cmd_verify(inst, verify_flags);
    }
    if (gen->parsed()) {
      std::cout << to_dimacs(gen_flags.make());
      return 0;
    }
    if (lemmas->parsed()) return cmd_check_lemmas(lemma_seed, lemma_count, lemma_jobs, lemma_flags);
    if (bench->parsed()) return cmd_bench(bench_seed, bench_count, bench_jobs, bench_flags);
  } catch (const divflow::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const DomainError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitParse;
}
