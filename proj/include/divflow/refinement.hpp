#pragma once

#include "divflow/barrier.hpp"
#include "divflow/graph.hpp"
#include "divflow/laplacian.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <vector>

namespace divflow {

enum class PieceKind {
  kQuadratic,  // a/4 <= q'' <= 4a
  kPower,      // h(0) = h'(0) = 0, b/4 <= h'' <= 4b
};

/// One scalar convex function with its curvature scale.
struct SeparableConvexPiece {
  std::function<Jet<double>(double)> eval;
  double curvature = 1.0;
  PieceKind kind = PieceKind::kQuadratic;
};

/// lower <= middle <= upper is the inequality being checked.
struct Sandwich {
  long double lower = 0;
  long double middle = 0;
  long double upper = 0;
  /// Holds up to a rounding slack relative to the magnitude of the terms.
  bool holds(long double rel_slack = 1e-12L) const;
};

/// (x+d)^p - x^p - p x^{p-1} d against 2^{-p}(x^{p-2}d^2 + d^p) and p 2^{p-1}(x^{p-2}d^2 + d^p);
/// x, x + d >= 0 and even p >= 2.
Sandwich power_increment_bounds(int p, double x, double delta);

/// h(x+d) - h(x) - h'(x) d against c1 d^2 / 2 and c2 d^2 / 2 for c1 <= h'' <= c2.
Sandwich quadratic_sandwich(const SeparableConvexPiece& h, double c1, double c2, double x, double delta);

/// h(x+d)^p - h(x)^p - p h(x)^{p-1} h'(x) d against
/// (8 c2)^{-2p} c1^{3p} (x^{2p-2} d^2 + d^{2p}) and (16 c2)^p (x^{2p-2} d^2 + d^{2p});
/// requires h(0) = h'(0) = 0 and c1 <= h'' <= c2.
Sandwich power_sandwich(const SeparableConvexPiece& h, double c1, double c2, int p, double x, double delta);

/// A vector of scalar pieces evaluated coordinatewise.
class PieceFamily {
 public:
  virtual ~PieceFamily() = default;
  virtual Eigen::Index size() const = 0;
  virtual PieceKind kind() const = 0;
  /// a_i for quadratic-like families, b_i for power-base families.
  virtual const Eigen::VectorXd& curvature() const = 0;
  virtual void evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd* value, Eigen::VectorXd* d1,
                        Eigen::VectorXd* d2) const = 0;
};

/// Family backed by independent SeparableConvexPiece objects.
class PieceList final : public PieceFamily {
 public:
  PieceList(std::vector<SeparableConvexPiece> pieces, PieceKind kind);
  Eigen::Index size() const override { return static_cast<Eigen::Index>(pieces_.size()); }
  PieceKind kind() const override { return kind_; }
  const Eigen::VectorXd& curvature() const override { return curvature_; }
  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd* value, Eigen::VectorXd* d1,
                Eigen::VectorXd* d2) const override;

 private:
  std::vector<SeparableConvexPiece> pieces_;
  PieceKind kind_;
  Eigen::VectorXd curvature_;
};

/// q_i(x) = linear_i x + curvature_i x^2 / 2.
class QuadraticFamily final : public PieceFamily {
 public:
  QuadraticFamily(Eigen::VectorXd curvature, Eigen::VectorXd linear);
  Eigen::Index size() const override { return curvature_.size(); }
  PieceKind kind() const override { return PieceKind::kQuadratic; }
  const Eigen::VectorXd& curvature() const override { return curvature_; }
  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd* value, Eigen::VectorXd* d1,
                Eigen::VectorXd* d2) const override;

 private:
  Eigen::VectorXd curvature_;
  Eigen::VectorXd linear_;
};

/// Adds nu x^2 to every piece of another quadratic-like family.
class RegularizedFamily final : public PieceFamily {
 public:
  RegularizedFamily(std::shared_ptr<const PieceFamily> base, double nu);
  Eigen::Index size() const override { return base_->size(); }
  PieceKind kind() const override { return PieceKind::kQuadratic; }
  const Eigen::VectorXd& curvature() const override { return curvature_; }
  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd* value, Eigen::VectorXd* d1,
                Eigen::VectorXd* d2) const override;

 private:
  std::shared_ptr<const PieceFamily> base_;
  double nu_;
  Eigen::VectorXd curvature_;
};

/// Smoothed objective g^T x + sum r_i x_i^2 + sum b_i^p x_i^{2p} over circulations.
struct SmoothedInstance {
  Eigen::VectorXd g;
  Eigen::VectorXd r;
  Eigen::VectorXd b;
  int p = 2;

  void validate(Eigen::Index m) const;
  double value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd hessian(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct OracleReport {
  int iterations = 0;
  int linear_solves = 0;
  /// Half the final Newton decrement; estimates the objective gap.
  double gap_estimate = 0.0;
  /// ||B^T x||_1 / (1 + ||x||_1) of the returned circulation.
  double demand_residual = 0.0;
};

struct OracleOptions {
  int max_iterations = 200;
  /// Stop once the gap estimate is below this fraction of the objective decrease so far.
  double relative_tol = 0.0;
};

/// Damped projected Newton on the smoothed instance; returns a circulation
/// whose objective is within tol of the minimum.
FlowVector oracle_2p(FlowSpace& space, const SmoothedInstance& instance, double tol, OracleReport* report = nullptr,
                     const OracleOptions& options = {});
FlowVector oracle_2p(const Graph& g, const SmoothedInstance& instance, double tol, OracleReport* report = nullptr);

/// min sum q_i(x_i) + W sum h_i(x_i)^p subject to B^T x = demand (the p-power
/// form), or with ||h(x)||_p in place of W sum h^p (the norm form).
struct RefinementProblem {
  std::shared_ptr<FlowSpace> space;
  DemandVector demand;
  std::shared_ptr<const PieceFamily> q;
  std::shared_ptr<const PieceFamily> h;
  int p = 2;
  double W = 1.0;

  void validate() const;
  double p_power_value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double norm_value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd norm_gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct RefinementOptions {
  /// Backtrack from a unit step down to the floor 2^{-22p}; otherwise always take the floor.
  bool line_search = true;
  /// Follow every refinement step with a Newton step on the true objective.
  bool newton_polish = true;
  int max_sweeps = 400;
  /// Start here instead of at the least-squares feasible flow; must be feasible.
  const FlowVector* warm_start = nullptr;
  /// Objective after every sweep, starting with the initial point.
  std::vector<double>* value_trace = nullptr;
};

struct RefinementReport {
  int sweeps = 0;
  int oracle_calls = 0;
  int linear_solves = 0;
  double value = 0.0;
  double last_decrease = 0.0;
};

/// Iterative refinement for the p-power form; stops once a sweep decreases
/// the objective by less than tol / 10.
FlowVector reduce_to_2p(const RefinementProblem& problem, double tol, const RefinementOptions& options = {},
                        RefinementReport* report = nullptr);

struct LpNormOptions {
  int max_evaluations = 80;
  /// Target for |log lambda - log(||h||_p^{1-p} / p)|.
  double multiplier_tol = 1e-11;
  RefinementOptions inner;
};

struct LpNormReport {
  int evaluations = 0;
  double multiplier = 0.0;
  bool degenerate = false;
  int sweeps = 0;
  int oracle_calls = 0;
  int linear_solves = 0;
};

/// Minimizes the norm form by searching for the multiplier lambda at which
/// the p-power minimizer x_lambda satisfies lambda p = ||h(x_lambda)||_p^{1-p}.
FlowVector solve_lp_norm(const RefinementProblem& problem, double tol, const LpNormOptions& options = {},
                         LpNormReport* report = nullptr);

}  // namespace divflow
