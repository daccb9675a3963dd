#include "subnewton/regularization.hpp"

#include <cmath>
#include <string>

#include "subnewton/error.hpp"

namespace subnewton {

Matrix spectral_floor(const Matrix& h, double lambda) {
  require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::Domain,
          "spectral floor threshold must be positive");
  const Matrix sym = symmetrized(h, "H");
  const auto es = symmetric_eigen(sym);
  const Vector clamped = es.eigenvalues().cwiseMax(lambda);
  const Matrix& v = es.eigenvectors();
  Matrix out = v * clamped.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix ridge_shift(const Matrix& h, double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::Domain,
          "ridge parameter must be >= 0");
  require(h.rows() == h.cols(), ErrorKind::Input, "H must be square");
  Matrix out = h;
  out.diagonal().array() += lambda;
  return out;
}

double spectral_threshold(const Matrix& h0, double epsilon, double epsilon0, Eigen::Index p,
                          ThresholdRule rule) {
  require(epsilon > 0.0 && epsilon < 1.0 && epsilon0 > 0.0 && epsilon0 < 1.0, ErrorKind::Domain,
          "epsilon and epsilon0 must lie in (0, 1)");
  require(p >= 1, ErrorKind::Input, "p must be >= 1");
  const double lmin = symmetric_eigen(symmetrized(h0, "H0"), false).eigenvalues().minCoeff();
  require(lmin > 0.0, ErrorKind::DegeneratePilot,
          "pilot Hessian has lambda_min = " + std::to_string(lmin) +
              "; the pilot sample missed strong convexity");
  const double base = (1.0 - epsilon) / (1.0 - epsilon0);
  if (rule == ThresholdRule::Global) return base * lmin;
  const double sp = std::sqrt(static_cast<double>(p));
  return (6.0 * sp + 3.0) / (6.0 * sp + 2.0) * base * lmin * (1.0 + kStrictThresholdNudge);
}

}  // namespace subnewton
