#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace blockmf {

enum class ErrorKind {
  kInvalidConfiguration,
  kInvalidArgument,
  kWrongClass,
  kUnknownEdge,
  kCapacity,
  kNumericalBlowup,
  kNonConvergence,
  kAssumptionViolation,
  kInternal,
};

const char* to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind lets the
/// CLI map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures caused by user input rather than numerics.
  bool is_validation() const noexcept {
    return kind_ == ErrorKind::kInvalidConfiguration || kind_ == ErrorKind::kInvalidArgument ||
           kind_ == ErrorKind::kWrongClass || kind_ == ErrorKind::kUnknownEdge ||
           kind_ == ErrorKind::kCapacity;
  }

 private:
  ErrorKind kind_;
};

/// Raised by iterative solvers; carries the residual history for diagnostics.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> residuals)
      : Error(ErrorKind::kNonConvergence, what), residuals_(std::move(residuals)) {}

  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace blockmf
