#pragma once

#include "subnewton/linalg.hpp"

namespace subnewton {

/// Eigenvalue floor: sum_i max(lambda_i(H), lambda) v_i v_i^T.
/// Eigenvectors of H are preserved; the result has lambda_min >= lambda.
Matrix spectral_floor(const Matrix& h, double lambda);

/// H + lambda I.
Matrix ridge_shift(const Matrix& h, double lambda);

enum class ThresholdRule { Global, Local };

/// Spectral-regularization threshold from a pilot Hessian H0:
///   global: (1 - eps) / (1 - eps0) * lambda_min(H0)
///   local:  (6 sqrt(p) + 3)(1 - eps) / ((6 sqrt(p) + 2)(1 - eps0)) * lambda_min(H0) * (1 + 1e-12)
/// The local rule is a strict inequality; the relative nudge satisfies it.
/// lambda_min(H0) <= 0 is a degenerate-pilot error.
double spectral_threshold(const Matrix& h0, double epsilon, double epsilon0, Eigen::Index p,
                          ThresholdRule rule);

inline constexpr double kStrictThresholdNudge = 1e-12;

}  // namespace subnewton
