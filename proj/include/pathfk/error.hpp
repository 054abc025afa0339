#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pathfk {

/// Raised when an argument lies outside an operation's domain
/// (time out of range, dimension mismatch, bad step size).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by the numerical solvers: singular regressions, non-finite
/// values, non-convergence, mesh failures.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Regression at a given backward step was too ill-conditioned to trust.
class SingularRegressionError : public SolverError {
 public:
  SingularRegressionError(std::size_t step, double condition)
      : SolverError("singular regression at step " + std::to_string(step) +
                    " (condition number " + std::to_string(condition) + ")"),
        step_(step),
        condition_(condition) {}

  std::size_t step() const noexcept { return step_; }
  double condition() const noexcept { return condition_; }

 private:
  std::size_t step_;
  double condition_;
};

/// Terminal functional or generator produced NaN/Inf on a sample path.
class NonFiniteError : public SolverError {
 public:
  NonFiniteError(const std::string& what_evaluated, std::size_t path_index)
      : SolverError(what_evaluated + " is not finite on path " +
                    std::to_string(path_index)),
        path_index_(path_index) {}

  std::size_t path_index() const noexcept { return path_index_; }

 private:
  std::size_t path_index_;
};

}  // namespace pathfk

namespace pathfk {

/// Lookup of a fixture id that is not in the catalog.
class UnknownFixture : public DomainError {
 public:
  explicit UnknownFixture(const std::string& id)
      : DomainError("unknown fixture '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

}  // namespace pathfk
