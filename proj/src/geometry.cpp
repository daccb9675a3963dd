#include "subnewton/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "subnewton/error.hpp"

namespace subnewton {

namespace {
constexpr double kOrthonormalTolerance = 1e-12;

void check_ambient(Eigen::Index rows, const ConeBasis& basis, const char* what) {
  require(rows == basis.ambient_dim(), ErrorKind::Input,
          std::string(what) + " has dimension " + std::to_string(rows) +
              " but the basis lives in R^" + std::to_string(basis.ambient_dim()));
}
}  // namespace

ConeBasis::ConeBasis(Matrix columns) : columns_(std::move(columns)) {
  const auto p = columns_.rows();
  const auto r = columns_.cols();
  require(r >= 1 && r <= p, ErrorKind::Input,
          "basis must have 1 <= r <= p columns, got p=" + std::to_string(p) +
              " r=" + std::to_string(r));
  require(columns_.allFinite(), ErrorKind::Numeric, "basis has non-finite entries");
  const Matrix gram = columns_.transpose() * columns_;
  const double dev = (gram - Matrix::Identity(r, r)).cwiseAbs().maxCoeff();
  require(dev <= kOrthonormalTolerance, ErrorKind::Input,
          "basis columns are not orthonormal (max |U^T U - I| = " + std::to_string(dev) + ")");
}

ConeBasis ConeBasis::identity(Eigen::Index p) { return ConeBasis(Matrix::Identity(p, p)); }

ConeBasis ConeBasis::orthonormalize(const Matrix& spanning) {
  require(spanning.cols() >= 1 && spanning.cols() <= spanning.rows(), ErrorKind::Input,
          "spanning set must have between 1 and p columns");
  Eigen::HouseholderQR<Matrix> qr(spanning);
  Matrix q = qr.householderQ() * Matrix::Identity(spanning.rows(), spanning.cols());
  return ConeBasis(std::move(q));
}

Matrix ConeBasis::compress(const Matrix& a) const {
  check_ambient(a.rows(), *this, "matrix");
  const Matrix sym = symmetrized(a);
  if (is_full_space()) {
    // U may be a rotation rather than I; only skip the product for I itself.
    if (columns_.isIdentity(0.0)) return sym;
  }
  Matrix c = columns_.transpose() * sym * columns_;
  return 0.5 * (c + c.transpose());
}

double restricted_vector_norm(const Vector& v, const ConeBasis& basis) {
  check_ambient(v.size(), basis, "vector");
  return (basis.columns().transpose() * v).norm();
}

RestrictedSpectrum restricted_eigenvalues(const Matrix& a, const ConeBasis& basis) {
  const Matrix c = basis.compress(a);
  const auto es = symmetric_eigen(c, false);
  RestrictedSpectrum out;
  out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  out.min = out.eigenvalues.front();
  out.max = out.eigenvalues.back();
  return out;
}

double restricted_matrix_norm(const Matrix& a, const ConeBasis& basis) {
  const auto spec = restricted_eigenvalues(a, basis);
  return std::max(std::abs(spec.min), std::abs(spec.max));
}

double restricted_min_eigenvalue(const Matrix& a, const ConeBasis& basis) {
  return restricted_eigenvalues(a, basis).min;
}

double restricted_condition_number(double k_bound, double gamma_bound) {
  require(std::isfinite(k_bound) && std::isfinite(gamma_bound), ErrorKind::Input,
          "condition number bounds must be finite");
  require(gamma_bound > 0.0, ErrorKind::Domain,
          "strong convexity bound gamma must be positive, got " + std::to_string(gamma_bound));
  require(k_bound >= gamma_bound, ErrorKind::Domain,
          "smoothness bound K must be >= gamma (K=" + std::to_string(k_bound) +
              ", gamma=" + std::to_string(gamma_bound) + ")");
  return k_bound / gamma_bound;
}

}  // namespace subnewton
