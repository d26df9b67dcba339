#include "blockmf/error.hpp"

namespace blockmf {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidConfiguration: return "invalid-configuration";
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kWrongClass: return "wrong-class";
    case ErrorKind::kUnknownEdge: return "unknown-edge";
    case ErrorKind::kCapacity: return "capacity";
    case ErrorKind::kNumericalBlowup: return "numerical-blowup";
    case ErrorKind::kNonConvergence: return "non-convergence";
    case ErrorKind::kAssumptionViolation: return "assumption-violation";
    case ErrorKind::kInternal: return "internal";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace blockmf
