#pragma once

#include <Eigen/Dense>

namespace subnewton {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative asymmetry tolerance for inputs that must be symmetric.
inline constexpr double kSymmetryTolerance = 1e-10;

/// Throws an input error if `a` is not square or deviates from symmetry by
/// more than kSymmetryTolerance * max(1, max|a_ij|); returns (a + a^T) / 2.
Matrix symmetrized(const Matrix& a, const char* what = "matrix");

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
/// Non-finite input is a numeric error.
Eigen::SelfAdjointEigenSolver<Matrix> symmetric_eigen(const Matrix& a, bool vectors = true);

bool all_finite(const Matrix& a);

}  // namespace subnewton
