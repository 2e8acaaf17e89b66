#pragma once

#include <stdexcept>
#include <string>

namespace afem {

/// Invalid argument to a library routine (bad index, parameter out of range).
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// Assembly failure, e.g. a degenerate element.
class AssemblyError : public std::runtime_error {
 public:
  explicit AssemblyError(const std::string& what) : std::runtime_error(what) {}
};

/// Requested bilinear form is not available for this problem.
class UnsupportedFormError : public std::runtime_error {
 public:
  explicit UnsupportedFormError(const std::string& what) : std::runtime_error(what) {}
};

/// Linear or nonlinear solve failed (singular matrix, no convergence, ...).
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver failed its contraction certification.
class NonContractiveSolverError : public SolverError {
 public:
  explicit NonContractiveSolverError(const std::string& what) : SolverError(what) {}
};

/// Hypotheses of a sequence lemma are violated by the given data.
class HypothesisError : public std::runtime_error {
 public:
  HypothesisError(const std::string& what, long index)
      : std::runtime_error(what), index_(index) {}
  long index() const noexcept { return index_; }

 private:
  long index_;
};

}  // namespace afem
