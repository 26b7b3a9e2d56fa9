#pragma once

#include <cstddef>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

namespace divflow {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes disagree with the graph.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A precondition on the caller's state was not met.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Demand cannot be routed (per-component sums do not vanish).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// An iterative method hit its cap before reaching the requested accuracy.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : Error(what + " (best residual " + format_residual(best_residual) + ")"),
        best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  static std::string format_residual(double r) {
    std::ostringstream out;
    out << std::scientific << std::setprecision(3) << r;
    return out.str();
  }

 private:
  double best_residual_;
};

/// The refinement loop stopped decreasing the objective while still far from tolerance.
class StallError : public Error {
 public:
  using Error::Error;
};

/// The outer multiplier search for the l_p-norm objective failed to bracket or converge.
class SearchError : public Error {
 public:
  using Error::Error;
};

/// An interior-point step exceeded the congestion limit.
class StepRejected : public Error {
 public:
  StepRejected(const std::string& what, double congestion)
      : Error(what), congestion_(congestion) {}
  double congestion() const { return congestion_; }

 private:
  double congestion_;
};

/// The end-to-end solver could not produce a certified answer.
class AlgorithmFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace divflow
