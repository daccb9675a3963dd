#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace subnewton {

enum class ErrorKind {
  Input,          // malformed arguments, dimension mismatch, bad index
  Domain,         // mathematically invalid parameter (e.g. gamma <= 0)
  Overflow,       // exp overflow in Poisson components
  Configuration,  // unsupported combination of options / missing constants
  Policy,         // invalid sample-size policy
  Numeric,        // eigendecomposition failure, non-finite values
  Curvature,      // model Hessian not positive definite
  Subproblem,     // inner solver hit its iteration cap
  DegeneratePilot,
  Reference,      // ground-truth minimizer failed to converge
  InsufficientData,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; the kind distinguishes failure classes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace subnewton
