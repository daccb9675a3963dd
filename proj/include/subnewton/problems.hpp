#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "subnewton/linalg.hpp"

namespace subnewton {

enum class ObjectiveKind { Ols, Logistic, Poisson, SvmQuadHinge, SyntheticQuadratic };

std::string_view to_string(ObjectiveKind kind);
/// Accepts "ols", "logistic", "poisson", "svm", "quadratic".
ObjectiveKind parse_objective_kind(std::string_view name);

/// Response-covariate pairs: row i of `features` is a_i, labels(i) is b_i.
struct Dataset {
  Matrix features;
  Vector labels;

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index p() const { return features.cols(); }
};

/// Throws an input error if labels do not match the domain of `kind`
/// (reals for OLS, {0,1} logistic, nonnegative integers Poisson, {-1,+1} SVM).
void validate_dataset(const Dataset& data, ObjectiveKind kind);

/// Finite sum F(x) = (1/n) sum_i f_i(x) with analytic per-component
/// derivatives. Immutable after construction; all evaluation methods are
/// safe to call concurrently. Component indices are 0-based.
class ComponentOracle {
 public:
  /// OLS, logistic or Poisson GLM with canonical link.
  static ComponentOracle glm(ObjectiveKind kind, Dataset data);
  /// Smooth quadratic-hinge SVM; each component carries the full ridge term,
  /// f_i(x) = C max(0, 1 - b_i a_i^T x)^2 + ||x||^2 / 2.
  static ComponentOracle svm(Dataset data, double c);
  /// f_i(x) = x^T A_i x / 2 - c_i^T x with symmetric PSD A_i.
  static ComponentOracle quadratic(std::vector<Matrix> a, std::vector<Vector> c);

  ObjectiveKind kind() const { return kind_; }
  std::size_t n() const { return n_; }
  Eigen::Index p() const { return p_; }
  double svm_c() const { return svm_c_; }
  const Dataset& data() const { return data_; }
  const std::vector<Matrix>& quadratic_matrices() const { return quad_a_; }
  const std::vector<Vector>& quadratic_vectors() const { return quad_c_; }

  double component_value(std::size_t i, const Vector& x) const;
  Vector component_gradient(std::size_t i, const Vector& x) const;
  Matrix component_hessian(std::size_t i, const Vector& x) const;

  /// acc += weight * grad f_i(x), without temporaries.
  void add_component_gradient(std::size_t i, const Vector& x, double weight, Vector& acc) const;
  /// acc += weight * hess f_i(x), without temporaries.
  void add_component_hessian(std::size_t i, const Vector& x, double weight, Matrix& acc) const;

  /// Means over i = 0..n-1, accumulated in ascending index order.
  double full_value(const Vector& x) const;
  Vector full_gradient(const Vector& x) const;
  Matrix full_hessian(const Vector& x) const;

  /// Hessian Lipschitz constant metadata: user-supplied if set, otherwise the
  /// analytic default (0 for OLS and quadratics, the max|Phi'''| ||a_i||^3
  /// bound for logistic), or nothing.
  std::optional<double> hessian_lipschitz() const;
  void set_hessian_lipschitz(double l);

  /// Precomputed max_i ||a_i|| (0 for quadratics).
  double max_row_norm() const { return max_row_norm_; }

 private:
  ComponentOracle() = default;
  void check_index(std::size_t i) const;
  void check_point(const Vector& x) const;
  void precompute_bounds();
  /// Linear predictor a_i^T x with the Poisson overflow guard applied.
  double predictor(std::size_t i, const Vector& x) const;

  ObjectiveKind kind_ = ObjectiveKind::Ols;
  std::size_t n_ = 0;
  Eigen::Index p_ = 0;
  Dataset data_;
  double svm_c_ = 0.0;
  std::vector<Matrix> quad_a_;
  std::vector<Vector> quad_c_;
  std::optional<double> user_lipschitz_;

  // Per-dataset maxima over i used by the gradient bounds.
  double max_row_norm_ = 0.0;
  double table_bound_ = 0.0;        // Table-style uniform G over the unit l1-ball
  double svm_slope_ = 0.0;          // max_i (2C ||a_i||^2 + 1)
  double svm_offset_ = 0.0;         // 2C max_i |b_i| ||a_i||

  friend double gradient_bound(const ComponentOracle&, const std::optional<Vector>&);
};

/// Bound G with ||grad f_i|| <= G for all i.
///  - no point: uniform bound over the unit l1-ball (OLS, logistic, Poisson);
///  - point x: pointwise bound at x (SVM only).
/// Other combinations are configuration errors.
double gradient_bound(const ComponentOracle& oracle, const std::optional<Vector>& x);

/// Largest component-gradient norm at x by enumeration (exact G(x)).
double exact_gradient_bound(const ComponentOracle& oracle, const Vector& x);

/// Estimates the component Hessian Lipschitz constant as the largest ratio
/// ||hess f_i(x) - hess f_i(y)|| / ||x - y|| over `pairs` random point pairs
/// drawn uniformly from the ball of `radius` around `center`.
double estimate_hessian_lipschitz(const ComponentOracle& oracle, const Vector& center,
                                  double radius, int pairs, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t n = 100;
  Eigen::Index p = 5;
  ObjectiveKind kind = ObjectiveKind::Logistic;
  double conditioning = 1.0;
  std::uint64_t seed = 0;
  double svm_c = 1.0;
};

struct SyntheticProblem {
  ComponentOracle oracle;
  /// Closed-form minimizer (quadratics only).
  std::optional<Vector> x_star;
};

/// Deterministic test-problem generator.
SyntheticProblem make_synthetic(const SyntheticSpec& spec);

/// Solves (sum_i A_i) x = sum_i c_i for a quadratic oracle.
Vector quadratic_minimizer(const ComponentOracle& oracle);

/// CSV with header `b,a1,...,ap`, one record per component.
Dataset read_dataset_csv(std::istream& in, ObjectiveKind kind);
Dataset load_dataset_csv(const std::string& path, ObjectiveKind kind);
void write_dataset_csv(std::ostream& out, const Dataset& data);
void save_dataset_csv(const std::string& path, const Dataset& data);

}  // namespace subnewton
