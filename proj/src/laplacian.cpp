#include "divflow/laplacian.hpp"

#include "divflow/errors.hpp"

#include <cmath>
#include <numeric>

namespace divflow {

namespace {

int find_root(std::vector<int>& parent, int v) {
  while (parent[static_cast<std::size_t>(v)] != v) {
    int& p = parent[static_cast<std::size_t>(v)];
    p = parent[static_cast<std::size_t>(p)];
    v = p;
  }
  return v;
}

constexpr double kTiny = 1e-300;

}  // namespace

LaplacianSolver::LaplacianSolver(const Graph& g, LaplacianOptions options)
    : n_(g.n()), options_(options), component_(static_cast<std::size_t>(g.n()), -1) {
  tail_.reserve(static_cast<std::size_t>(g.m()));
  head_.reserve(static_cast<std::size_t>(g.m()));
  std::vector<int> parent(static_cast<std::size_t>(n_));
  std::iota(parent.begin(), parent.end(), 0);
  for (const Edge& e : g.edges()) {
    tail_.push_back(e.tail);
    head_.push_back(e.head);
    const int ru = find_root(parent, e.tail);
    const int rv = find_root(parent, e.head);
    if (ru != rv) parent[static_cast<std::size_t>(std::max(ru, rv))] = std::min(ru, rv);
  }

  // Roots are the lowest-id vertex of each component because unions keep the min.
  reduced_.assign(static_cast<std::size_t>(n_), -1);
  std::vector<int> label(static_cast<std::size_t>(n_), -1);
  for (int v = 0; v < n_; ++v) {
    const int r = find_root(parent, v);
    if (label[static_cast<std::size_t>(r)] < 0) label[static_cast<std::size_t>(r)] = component_count_++;
    component_[static_cast<std::size_t>(v)] = label[static_cast<std::size_t>(r)];
    if (r != v) reduced_[static_cast<std::size_t>(v)] = reduced_size_++;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * tail_.size());
  for (std::size_t e = 0; e < tail_.size(); ++e) {
    const Eigen::Index rt = reduced_[static_cast<std::size_t>(tail_[e])];
    const Eigen::Index rh = reduced_[static_cast<std::size_t>(head_[e])];
    if (rt >= 0) triplets.emplace_back(rt, rt, 0.0);
    if (rh >= 0) triplets.emplace_back(rh, rh, 0.0);
    if (rt >= 0 && rh >= 0) {
      triplets.emplace_back(rt, rh, 0.0);
      triplets.emplace_back(rh, rt, 0.0);
    }
  }
  matrix_.resize(reduced_size_, reduced_size_);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
  slots_.resize(tail_.size());
  const double* base = matrix_.valuePtr();
  for (std::size_t e = 0; e < tail_.size(); ++e) {
    const Eigen::Index rt = reduced_[static_cast<std::size_t>(tail_[e])];
    const Eigen::Index rh = reduced_[static_cast<std::size_t>(head_[e])];
    auto slot = [&](Eigen::Index i, Eigen::Index j) -> Eigen::Index {
      return (i >= 0 && j >= 0) ? (&matrix_.coeffRef(i, j) - base) : -1;
    };
    slots_[e] = {slot(rt, rt), slot(rh, rh), slot(rt, rh), slot(rh, rt)};
  }
}

void LaplacianSolver::factorize(const Eigen::Ref<const Eigen::VectorXd>& resistances) {
  if (resistances.size() != edge_count()) throw DimensionError("resistance length differs from edge count");
  for (Eigen::Index e = 0; e < resistances.size(); ++e) {
    const double r = resistances[e];
    if (!(r > 0.0) || !(r <= options_.resistance_ceiling)) {
      throw DomainError("resistance of edge " + std::to_string(e) + " is not in (0, ceiling]");
    }
  }
  conductance_ = resistances.cwiseInverse();
  double* values = matrix_.valuePtr();
  std::fill(values, values + matrix_.nonZeros(), 0.0);
  for (std::size_t e = 0; e < slots_.size(); ++e) {
    const double c = conductance_[static_cast<Eigen::Index>(e)];
    const auto& s = slots_[e];
    if (s[0] >= 0) values[s[0]] += c;
    if (s[1] >= 0) values[s[1]] += c;
    if (s[2] >= 0) values[s[2]] -= c;
    if (s[3] >= 0) values[s[3]] -= c;
  }
  if (reduced_size_ == 0) {
    factorized_ = true;
    return;
  }
  if (reduced_size_ <= options_.direct_limit) {
    if (!analyzed_) {
      direct_.analyzePattern(matrix_);
      analyzed_ = true;
    }
    direct_.factorize(matrix_);
    if (direct_.info() != Eigen::Success) throw ConvergenceError("sparse Cholesky factorization failed", INFINITY);
  } else {
    iterative_.setMaxIterations(options_.max_cg_iterations);
    iterative_.setTolerance(1e-13);
    iterative_.compute(matrix_);
  }
  factorized_ = true;
}

void LaplacianSolver::remove_component_means(Eigen::VectorXd& d) const {
  if (d.size() != n_) throw DimensionError("vector length differs from vertex count");
  std::vector<double> sum(static_cast<std::size_t>(component_count_), 0.0);
  std::vector<double> count(static_cast<std::size_t>(component_count_), 0.0);
  for (Eigen::Index v = 0; v < n_; ++v) {
    const auto c = static_cast<std::size_t>(component_[static_cast<std::size_t>(v)]);
    sum[c] += d[v];
    count[c] += 1.0;
  }
  for (Eigen::Index v = 0; v < n_; ++v) {
    const auto c = static_cast<std::size_t>(component_[static_cast<std::size_t>(v)]);
    d[v] -= sum[c] / count[c];
  }
}

void LaplacianSolver::check_demand(const Eigen::Ref<const Eigen::VectorXd>& demand) const {
  if (demand.size() != n_) throw DimensionError("demand length differs from vertex count");
  std::vector<double> sum(static_cast<std::size_t>(component_count_), 0.0);
  std::vector<double> mass(static_cast<std::size_t>(component_count_), 0.0);
  for (Eigen::Index v = 0; v < n_; ++v) {
    const auto c = static_cast<std::size_t>(component_[static_cast<std::size_t>(v)]);
    sum[c] += demand[v];
    mass[c] += std::abs(demand[v]);
  }
  for (std::size_t c = 0; c < sum.size(); ++c) {
    if (std::abs(sum[c]) > 1e-9 * (1.0 + mass[c])) {
      throw InfeasibleError("demand does not sum to zero on component " + std::to_string(c));
    }
  }
}

Eigen::VectorXd LaplacianSolver::potential_differences(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (y.size() != n_) throw DimensionError("potential length differs from vertex count");
  Eigen::VectorXd out(edge_count());
  for (std::size_t e = 0; e < tail_.size(); ++e) {
    out[static_cast<Eigen::Index>(e)] = y[head_[e]] - y[tail_[e]];
  }
  return out;
}

DemandVector LaplacianSolver::net_inflow(const Eigen::Ref<const Eigen::VectorXd>& f) const {
  if (f.size() != edge_count()) throw DimensionError("flow length differs from edge count");
  DemandVector d = DemandVector::Zero(n_);
  for (std::size_t e = 0; e < tail_.size(); ++e) {
    const double x = f[static_cast<Eigen::Index>(e)];
    d[tail_[e]] -= x;
    d[head_[e]] += x;
  }
  return d;
}

LinearSolveReport LaplacianSolver::solve(const Eigen::Ref<const Eigen::VectorXd>& demand,
                                         PotentialVector& potentials, double tol) const {
  if (!factorized_) throw ContractError("solve before factorize");
  check_demand(demand);

  // Remove rounding-level component imbalance so the grounded rows stay consistent.
  Eigen::VectorXd d = demand;
  remove_component_means(d);

  LinearSolveReport report;
  report.direct = reduced_size_ <= options_.direct_limit;
  potentials = PotentialVector::Zero(n_);
  const double scale = std::max(d.norm(), kTiny);
  if (reduced_size_ == 0 || d.norm() == 0.0) return report;

  auto reduce = [&](const Eigen::VectorXd& full) {
    Eigen::VectorXd out(reduced_size_);
    for (Eigen::Index v = 0; v < n_; ++v) {
      const Eigen::Index r = reduced_[static_cast<std::size_t>(v)];
      if (r >= 0) out[r] = full[v];
    }
    return out;
  };
  auto inner_solve = [&](const Eigen::VectorXd& rhs) -> Eigen::VectorXd {
    if (report.direct) return direct_.solve(rhs);
    Eigen::VectorXd x = iterative_.solve(rhs);
    report.iterations += static_cast<int>(iterative_.iterations());
    return x;
  };

  Eigen::VectorXd residual = d;
  for (int pass = 0; pass < 4; ++pass) {
    const Eigen::VectorXd correction = inner_solve(reduce(residual));
    for (Eigen::Index v = 0; v < n_; ++v) {
      const Eigen::Index r = reduced_[static_cast<std::size_t>(v)];
      if (r >= 0) potentials[v] += correction[r];
    }
    // Backward error: measured against the larger of the demand and the edge flows it
    // cancels, since the flows can dwarf the demand when conductances span many decades.
    const Eigen::VectorXd flow = potential_differences(potentials).cwiseProduct(conductance_);
    residual = d - net_inflow(flow);
    report.relative_residual = residual.norm() / std::max(scale, flow.norm());
    if (report.relative_residual <= tol) break;
  }

  std::vector<double> sum(static_cast<std::size_t>(component_count_), 0.0);
  std::vector<double> count(static_cast<std::size_t>(component_count_), 0.0);
  for (Eigen::Index v = 0; v < n_; ++v) {
    const auto c = static_cast<std::size_t>(component_[static_cast<std::size_t>(v)]);
    sum[c] += potentials[v];
    count[c] += 1.0;
  }
  for (Eigen::Index v = 0; v < n_; ++v) {
    const auto c = static_cast<std::size_t>(component_[static_cast<std::size_t>(v)]);
    potentials[v] -= sum[c] / count[c];
  }
  if (report.relative_residual > tol) {
    throw ConvergenceError("Laplacian solve missed tolerance", report.relative_residual);
  }
  return report;
}

FlowVector LaplacianSolver::electric_flow(const Eigen::Ref<const Eigen::VectorXd>& demand, double tol,
                                          LinearSolveReport* report) const {
  PotentialVector y;
  const LinearSolveReport rep = solve(demand, y, tol);
  if (report != nullptr) *report = rep;
  return potential_differences(y).cwiseProduct(conductance_);
}

CirculationProjector::CirculationProjector(const Graph& g) : solver_(g) {
  solver_.factorize(Eigen::VectorXd::Ones(g.m()));
}

Eigen::VectorXd CirculationProjector::project(const Eigen::Ref<const Eigen::VectorXd>& g, double tol) const {
  return g - solver_.electric_flow(solver_.net_inflow(g), tol);
}

FlowVector CirculationProjector::min_norm_flow(const Eigen::Ref<const Eigen::VectorXd>& d, double tol) const {
  return solver_.electric_flow(d, tol);
}

FlowVector CirculationProjector::repair(const Eigen::Ref<const Eigen::VectorXd>& x,
                                        const Eigen::Ref<const Eigen::VectorXd>& target, double tol) const {
  DemandVector excess = solver_.net_inflow(x) - target;
  solver_.remove_component_means(excess);
  return x - solver_.electric_flow(excess, tol);
}

std::pair<PotentialVector, LinearSolveReport> solve_laplacian(const Graph& g,
                                                              const Eigen::Ref<const Eigen::VectorXd>& r,
                                                              const Eigen::Ref<const Eigen::VectorXd>& d,
                                                              double tol) {
  LaplacianSolver solver(g);
  solver.factorize(r);
  PotentialVector y;
  const LinearSolveReport report = solver.solve(d, y, tol);
  return {std::move(y), report};
}

FlowVector electric_flow(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& r,
                         const Eigen::Ref<const Eigen::VectorXd>& d, double tol) {
  LaplacianSolver solver(g);
  solver.factorize(r);
  return solver.electric_flow(d, tol);
}

FlowVector min_norm_feasible_flow(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& d, double tol) {
  return electric_flow(g, Eigen::VectorXd::Ones(g.m()), d, tol);
}

Eigen::VectorXd project_to_circulation(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& x, double tol) {
  if (x.size() != g.m()) throw DimensionError("vector length differs from edge count");
  return CirculationProjector(g).project(x, tol);
}

}  // namespace divflow
