#include "subnewton/error.hpp"

namespace subnewton {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Policy: return "policy";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Curvature: return "curvature";
    case ErrorKind::Subproblem: return "subproblem";
    case ErrorKind::DegeneratePilot: return "degenerate-pilot";
    case ErrorKind::Reference: return "reference";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace subnewton
