#include "subnewton/linalg.hpp"

#include <algorithm>
#include <string>

#include "subnewton/error.hpp"

namespace subnewton {

bool all_finite(const Matrix& a) { return a.allFinite(); }

Matrix symmetrized(const Matrix& a, const char* what) {
  require(a.rows() == a.cols(), ErrorKind::Input,
          std::string(what) + " must be square, got " + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()));
  require(all_finite(a), ErrorKind::Numeric, std::string(what) + " has non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = a.size() == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
  require(asym <= kSymmetryTolerance * scale, ErrorKind::Input,
          std::string(what) + " is not symmetric (max |a - a^T| = " + std::to_string(asym) + ")");
  return 0.5 * (a + a.transpose());
}

Eigen::SelfAdjointEigenSolver<Matrix> symmetric_eigen(const Matrix& a, bool vectors) {
  require(all_finite(a), ErrorKind::Numeric, "eigendecomposition of non-finite matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> es(
      a, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, ErrorKind::Numeric, "eigendecomposition did not converge");
  return es;
}

}  // namespace subnewton
