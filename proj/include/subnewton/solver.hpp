#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "subnewton/linalg.hpp"
#include "subnewton/problems.hpp"
#include "subnewton/regularization.hpp"
#include "subnewton/sampling.hpp"

namespace subnewton {

// ---------------------------------------------------------------------------
// Feasible sets

struct Unconstrained {};
struct L1Ball {
  double radius = 1.0;
};
struct Box {
  Vector lower, upper;
};

class ConstraintSet {
 public:
  ConstraintSet() = default;
  static ConstraintSet unconstrained() { return {}; }
  static ConstraintSet l1_ball(double radius);
  static ConstraintSet box(Vector lower, Vector upper);

  bool is_unconstrained() const { return std::holds_alternative<Unconstrained>(set_); }
  const std::variant<Unconstrained, L1Ball, Box>& get() const { return set_; }

  /// Euclidean projection (identity when unconstrained).
  Vector project(const Vector& x) const;
  bool contains(const Vector& x, double tol = 1e-12) const;
  std::string describe() const;

 private:
  std::variant<Unconstrained, L1Ball, Box> set_;
};

/// Sort-based Euclidean projection onto {x : ||x||_1 <= radius}.
Vector project_l1_ball(const Vector& v, double radius);

// ---------------------------------------------------------------------------
// Quadratic model subproblem

struct SubproblemOptions {
  double tolerance = 1e-10;        // gradient-mapping norm, relative to 1 + ||g||
  long max_inner_iterations = 100000;
};

struct SubproblemResult {
  Vector x;
  double residual = 0.0;  // ||H d + g|| (unconstrained) or gradient-mapping norm
  long inner_iterations = 0;
};

/// argmin over the feasible set of g^T (x - xk) + (x - xk)^T H (x - xk) / 2.
/// Unconstrained: Cholesky solve, H must be positive definite
/// (lambda_min > 1e-12 ||H||), otherwise a curvature error. Constrained:
/// accelerated projected gradient with adaptive restart; H must be PSD.
SubproblemResult solve_quadratic_model(const Vector& xk, const Vector& g, const Matrix& h,
                                       const ConstraintSet& constraint,
                                       const SubproblemOptions& options = {});

// ---------------------------------------------------------------------------
// Accuracy schedules

enum class Schedule {
  Constant,          // epsilon
  Geometric,         // rho^k epsilon
  LogGlobal,         // 1 / (1 + 2 ln(4 + k))
  LogLocal,          // 1 / (1 + 4 ln(4 + k))
  GeometricCompound  // eps_k = rho^k eps_{k-1}, i.e. rho^{k(k+1)/2} epsilon
};

std::string_view to_string(Schedule schedule);
Schedule parse_schedule(std::string_view name);

double epsilon_schedule(Schedule schedule, long k, double epsilon, double rho = 0.5);

// ---------------------------------------------------------------------------
// Drivers

enum class Algorithm {
  SubsampledHessian,     // fixed Hessian sample size, full gradient
  ScheduledHessian,      // Hessian accuracy follows a schedule
  SpectralRegularized,   // pilot threshold + eigenvalue floor
  RidgeRegularized,      // H + lambda I
  IndependentGradient,   // independent Hessian and gradient samples
  SharedSample,          // one sample for both
};

std::string_view to_string(Algorithm algorithm);
/// Accepts "alg1".."alg6" and the role names above in snake_case.
Algorithm parse_algorithm(std::string_view name);

/// How a sample size is chosen.
struct SampleSizeMode {
  enum class Kind { Bound, Full, Fixed } kind = Kind::Bound;
  std::uint64_t fixed = 0;

  static SampleSizeMode bound() { return {}; }
  static SampleSizeMode full() { return {Kind::Full, 0}; }
  static SampleSizeMode fixed_size(std::uint64_t s) { return {Kind::Fixed, s}; }
};

/// Where the per-iteration gradient bound G comes from.
struct GradientBoundSource {
  enum class Kind { Uniform, Pointwise, Exact, Fixed } kind = Kind::Uniform;
  double value = 0.0;
};

struct AlgorithmConfig {
  Algorithm algorithm = Algorithm::SubsampledHessian;
  double epsilon = 0.2;           // Hessian accuracy
  double epsilon_gradient = 0.2;  // gradient accuracy (independent sampling)
  double epsilon_pilot = 0.5;     // pilot accuracy (spectral regularization)
  double delta = 0.1;
  double rho = 0.5;
  Schedule schedule = Schedule::Constant;
  double lambda = 0.0;  // ridge parameter
  ThresholdRule threshold_rule = ThresholdRule::Global;

  SizeVariant size_variant = SizeVariant::HessianBasic;
  KappaPower kappa_power = KappaPower::Squared;
  std::optional<double> kappa;
  std::optional<double> intrinsic_dimension;
  Replacement replacement = Replacement::With;
  SampleSizeMode hessian_sampling;
  SampleSizeMode gradient_sampling;
  GradientBoundSource gradient_bound;

  long max_iterations = 50;
  double tolerance = 1e-12;  // on ||x_{k+1} - x_k|| / (1 + ||x_k||)
  std::uint64_t seed = 0;
  SubproblemOptions subproblem;

  /// Configuration error naming the offending field.
  void validate() const;
};

struct IterationRecord {
  long k = 0;
  Vector x;
  std::optional<double> err;  // ||x_k - x*||
  // Quantities of the step taken from x_k (absent on the final record when
  // the run stopped at max_iterations).
  std::uint64_t sample_hess = 0;
  std::uint64_t sample_grad = 0;
  std::uint64_t sample_pilot = 0;
  std::optional<double> eps_k;
  std::optional<double> eps_grad_k;
  std::optional<double> lambda_k;
  std::optional<double> grad_bound;
  std::optional<double> model_residual;
  long inner_iterations = 0;
  std::optional<double> step_norm;
  double step_size = 1.0;  // alpha_k; always the natural Newton step
};

enum class Termination { Tolerance, MaxIterations };

class IterationTrace {
 public:
  /// Appends; throws an input error unless k strictly increases.
  void append(IterationRecord record);
  const std::vector<IterationRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const IterationRecord& back() const { return records_.back(); }

  Termination termination = Termination::MaxIterations;

  /// ||x_k - x*|| for every record (recomputed from x).
  std::vector<double> errors(const Vector& x_star) const;

 private:
  std::vector<IterationRecord> records_;
};

using RecordSink = std::function<void(const IterationRecord&)>;

/// Runs the configured driver from x0 with unit step size. Errors raised
/// inside an iteration are rethrown with the iteration index prefixed.
IterationTrace run_algorithm(const AlgorithmConfig& config, const ComponentOracle& oracle,
                             const ConstraintSet& constraint, const Vector& x0,
                             const std::optional<Vector>& x_star = std::nullopt,
                             const RecordSink& sink = {});

}  // namespace subnewton
