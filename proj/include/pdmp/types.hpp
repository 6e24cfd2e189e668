#pragma once

#include <Eigen/Core>

#include <limits>
#include <stdexcept>
#include <string>

namespace pdmp {

// State points are small dynamic vectors with inline storage; models are
// capped at kMaxStateDim dimensions so no evaluation ever touches the heap.
inline constexpr int kMaxStateDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxStateDim, 1>;

using Action = double;

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

inline Vec vec1(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

inline Vec vec2(double x, double y) {
  Vec v(2);
  v[0] = x;
  v[1] = y;
  return v;
}

// Error taxonomy. Callers that want to distinguish failure classes catch the
// specific type; everything derives from Error for coarse handling.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A numeric procedure could not certify its result (tail bound, step failure).
class NumericError : public Error {
 public:
  using Error::Error;
};

// An iterative solver exhausted its budget without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// A verification pass detected an inconsistency it cannot resolve silently.
class DiagnosticError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdmp
