#pragma once

#include "divflow/graph.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace divflow {

struct LinearSolveReport {
  /// ||B^T R^{-1} B y - d||_2 / max(||d||_2, tiny) after the solve.
  double relative_residual = 0.0;
  int iterations = 0;
  bool direct = true;
};

struct LaplacianOptions {
  /// Vertex count above which conjugate gradients replace sparse Cholesky.
  Eigen::Index direct_limit = 50000;
  double resistance_ceiling = 1e200;
  int max_cg_iterations = 20000;
};

/// Solves B^T R^{-1} B y = d on one fixed graph for changing resistances R.
///
/// The lowest-id vertex of every connected component is grounded; returned
/// potentials have mean zero on each component. The sparsity pattern is
/// analyzed once, so repeated factorizations reuse the symbolic phase.
class LaplacianSolver {
 public:
  explicit LaplacianSolver(const Graph& g, LaplacianOptions options = {});

  Eigen::Index vertex_count() const { return n_; }
  Eigen::Index edge_count() const { return static_cast<Eigen::Index>(tail_.size()); }
  int component_count() const { return component_count_; }
  const std::vector<int>& component() const { return component_; }

  void factorize(const Eigen::Ref<const Eigen::VectorXd>& resistances);

  /// Potentials for demand d under the last factorized resistances.
  LinearSolveReport solve(const Eigen::Ref<const Eigen::VectorXd>& demand, PotentialVector& potentials,
                          double tol) const;

  /// Flow R^{-1} B y routing d; the electrical-energy minimizer.
  FlowVector electric_flow(const Eigen::Ref<const Eigen::VectorXd>& demand, double tol,
                           LinearSolveReport* report = nullptr) const;

  /// Throws InfeasibleError unless d sums to zero on every component.
  void check_demand(const Eigen::Ref<const Eigen::VectorXd>& demand) const;
  /// Shifts d so it sums to zero on every connected component.
  void remove_component_means(Eigen::VectorXd& d) const;

  Eigen::VectorXd potential_differences(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  DemandVector net_inflow(const Eigen::Ref<const Eigen::VectorXd>& f) const;

 private:
  Eigen::Index n_ = 0;
  LaplacianOptions options_;
  std::vector<int> tail_;
  std::vector<int> head_;
  std::vector<int> component_;
  int component_count_ = 0;
  std::vector<Eigen::Index> reduced_;  // vertex -> grounded-system row, -1 when grounded
  Eigen::Index reduced_size_ = 0;
  std::vector<std::array<Eigen::Index, 4>> slots_;  // per edge: (tt, hh, th, ht) value offsets
  Eigen::SparseMatrix<double> matrix_;
  Eigen::VectorXd conductance_;
  bool factorized_ = false;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> direct_;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> iterative_;
};

/// Orthogonal projection onto circulations, g - B (B^T B)^+ B^T g, with a
/// single cached unit-resistance factorization.
class CirculationProjector {
 public:
  explicit CirculationProjector(const Graph& g);
  Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& g, double tol = 1e-12) const;
  /// Least-squares flow routing d, B (B^T B)^+ d.
  FlowVector min_norm_flow(const Eigen::Ref<const Eigen::VectorXd>& d, double tol = 1e-12) const;
  /// x minus the least-squares flow of its excess over target. The excess is
  /// rebalanced per component first, so rounding in B^T x of huge x is tolerated.
  FlowVector repair(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& target,
                    double tol = 1e-12) const;

 private:
  LaplacianSolver solver_;
};

/// Per-graph linear-algebra cache shared by the iterative solvers: one
/// factorization slot for changing resistances plus the unit projector.
class FlowSpace {
 public:
  explicit FlowSpace(const Graph& g, LaplacianOptions options = {})
      : weighted_(g, options), projector_(g) {}

  Eigen::Index vertex_count() const { return weighted_.vertex_count(); }
  Eigen::Index edge_count() const { return weighted_.edge_count(); }
  LaplacianSolver& weighted() { return weighted_; }
  const LaplacianSolver& weighted() const { return weighted_; }
  const CirculationProjector& projector() const { return projector_; }
  DemandVector net_inflow(const Eigen::Ref<const Eigen::VectorXd>& f) const { return weighted_.net_inflow(f); }

 private:
  LaplacianSolver weighted_;
  CirculationProjector projector_;
};

std::pair<PotentialVector, LinearSolveReport> solve_laplacian(const Graph& g,
                                                              const Eigen::Ref<const Eigen::VectorXd>& r,
                                                              const Eigen::Ref<const Eigen::VectorXd>& d,
                                                              double tol = 1e-10);

FlowVector electric_flow(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& r,
                         const Eigen::Ref<const Eigen::VectorXd>& d, double tol = 1e-10);

FlowVector min_norm_feasible_flow(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& d,
                                  double tol = 1e-10);

Eigen::VectorXd project_to_circulation(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& x,
                                       double tol = 1e-10);

}  // namespace divflow
