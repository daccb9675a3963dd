#pragma once

#include <vector>

#include "subnewton/linalg.hpp"

namespace subnewton {

/// Orthonormal basis U (p x r) of the subspace over which norms and
/// eigenvalues are restricted. General (non-subspace) tangent cones are not
/// representable; the full space is ConeBasis::identity(p).
class ConeBasis {
 public:
  /// Validates U^T U = I to 1e-12 entrywise and 1 <= r <= p.
  explicit ConeBasis(Matrix columns);

  static ConeBasis identity(Eigen::Index p);
  /// Orthonormalizes the column span of `spanning` (thin Householder QR).
  static ConeBasis orthonormalize(const Matrix& spanning);

  const Matrix& columns() const { return columns_; }
  Eigen::Index ambient_dim() const { return columns_.rows(); }
  Eigen::Index dim() const { return columns_.cols(); }
  bool is_full_space() const { return dim() == ambient_dim(); }

  /// U^T A U with A symmetrized first.
  Matrix compress(const Matrix& a) const;

 private:
  Matrix columns_;
};

struct RestrictedSpectrum {
  std::vector<double> eigenvalues;  // ascending
  double min = 0.0;
  double max = 0.0;
};

double restricted_vector_norm(const Vector& v, const ConeBasis& basis);
double restricted_matrix_norm(const Matrix& a, const ConeBasis& basis);
RestrictedSpectrum restricted_eigenvalues(const Matrix& a, const ConeBasis& basis);
double restricted_min_eigenvalue(const Matrix& a, const ConeBasis& basis);

/// kappa = K / gamma; requires K >= gamma > 0.
double restricted_condition_number(double k_bound, double gamma_bound);

}  // namespace subnewton
