#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subnewton/geometry.hpp"
#include "subnewton/linalg.hpp"
#include "subnewton/problems.hpp"
#include "subnewton/sampling.hpp"
#include "subnewton/solver.hpp"
#include "subnewton/theory.hpp"

namespace subnewton {

// ---------------------------------------------------------------------------
// Regularity and ground truth

/// K = max_i ||hess f_i(x)||_K, gamma = lambda_min^K(hess F(x)), kappa = K / gamma,
/// all by enumeration over the components.
struct RegularityConstants {
  double k_bound = 0.0;
  double gamma = 0.0;
  double kappa = 0.0;
};
RegularityConstants regularity_constants_at(const ComponentOracle& oracle, const Vector& x,
                                            const ConeBasis& basis);

struct ReferenceOptions {
  double step_tolerance = 1e-14;      // relative to 1 + ||x||
  long max_iterations = 200;
  double gradient_tolerance = 1e-10;  // unconstrained optimality
  double directional_tolerance = 1e-8;
  int feasible_directions = 64;       // sampled points for the constrained check
  double inner_tolerance = 1e-12;
  std::uint64_t seed = 0;
};

struct ReferenceSolution {
  Vector x;
  long iterations = 0;
  double optimality = 0.0;  // ||grad F|| or -min directional derivative
};

/// Deterministic full-data Newton from the projection of 0. Non-convergence
/// or a failed optimality check is a reference error.
ReferenceSolution reference_minimizer(const ComponentOracle& oracle,
                                      const ConstraintSet& constraint = {},
                                      const ReferenceOptions& options = {});

// ---------------------------------------------------------------------------
// Recursion and rate diagnostics

struct StepCheck {
  long k = 0;          // step from x_k to x_{k+1}
  double lhs = 0.0;    // ||D_{k+1}||
  double rhs = 0.0;    // eta + rho0 ||D_k|| + xi ||D_k||^2
  double margin = 0.0; // rhs - lhs
  bool satisfied = false;
};

struct RecursionReport {
  std::vector<StepCheck> steps;
  long satisfied = 0;
  double frequency = 1.0;  // 1 when there are no steps
  bool all() const { return satisfied == static_cast<long>(steps.size()); }
};

/// A step passes when lhs <= rhs (1 + slack) + noise_floor. A missing x* is a
/// configuration error.
RecursionReport recursion_check(const IterationTrace& trace, const std::optional<Vector>& x_star,
                                double rho0, double xi, double eta = 0.0, double slack = 0.0,
                                double noise_floor = 0.0);
RecursionReport recursion_check(const std::vector<double>& errors, double rho0, double xi,
                                double eta = 0.0, double slack = 0.0, double noise_floor = 0.0);
/// Per-step constants (entry k governs the step from x_k); steps whose entry
/// is empty are skipped.
RecursionReport recursion_check(const std::vector<double>& errors,
                                const std::vector<std::optional<RecursionConstants>>& per_step,
                                double slack = 0.0, double noise_floor = 0.0);

struct RateOptions {
  /// Recursion constants; when both are set the phase index is reported.
  std::optional<double> rho0, xi;
  /// Number of trailing ratios used for the Q-linear and superlinear verdicts
  /// (0 = all valid ratios).
  long tail = 0;
  /// Errors at or below this are treated as converged and excluded from ratios.
  double noise_floor = 0.0;
  /// A ratio counts as smaller than its predecessor only below (1 - strictness) times it.
  double strictness = 1e-9;
  /// Reference rate and envelope radius for the pattern checks.
  std::optional<double> rho, sigma;
  double slack = 0.10;
};

struct RateReport {
  std::vector<double> errors;
  /// ratios[j] = errors[j+1] / errors[j]; NaN where errors[j] or errors[j+1]
  /// is at or below the noise floor.
  std::vector<double> ratios;
  std::vector<long> tail_indices;  // indices into `ratios` used by the verdicts
  double q_linear_ratio = 0.0;     // max tail ratio
  bool superlinear = false;        // tail ratios strictly decreasing
  /// First k with rho0 ||D_k|| >= xi ||D_k||^2 (linear term dominates).
  std::optional<long> phase_index;
  double envelope_sigma = 0.0;  // errors[0]
  double envelope_rho = 0.0;    // max_k (errors[k] / errors[0])^(1/k)

  // Pattern consistency (each with the configured slack).
  bool q_linear = false;            // tail ratios <= rho
  bool q_superlinear = false;       // ratio into k <= rho^k
  bool slow_growth = false;         // ratio into k <= 1 / ln(3 + k)
  bool r_linear = false;            // errors[k] <= rho^k sigma
  bool r_superlinear = false;       // errors[k] <= tau_k sigma
};

/// Fewer than 3 errors is an insufficient-data error.
RateReport fit_rates(const std::vector<double>& errors, const RateOptions& options = {});
RateReport fit_rates(const IterationTrace& trace, const std::optional<Vector>& x_star,
                     const RateOptions& options = {});

// ---------------------------------------------------------------------------
// Monte-Carlo concentration

struct FrequencyEstimate {
  long successes = 0;
  long trials = 0;
  double frequency = 0.0;
  double lower = 0.0;  // two-sided 95% Wilson interval
  double upper = 0.0;
  double one_sided_lower = 0.0;  // one-sided 95% Wilson bound
  /// Decision rule: one-sided lower bound at least `threshold`.
  bool passes(double threshold) const { return one_sided_lower >= threshold; }
};

FrequencyEstimate wilson_estimate(long successes, long trials);
/// Wilson score bounds for a given normal quantile.
std::pair<double, double> wilson_interval(long successes, long trials, double z);

struct ConcentrationOptions {
  std::uint64_t seed = 0;
  /// Replaces the computed sample size.
  std::optional<std::uint64_t> size_override;
  /// Multiplies the computed size (after rounding); e.g. 0.25 for an undersized run.
  double size_scale = 1.0;
  /// Replaces the enumerated kappa in the Hessian bound.
  std::optional<double> kappa;
};

struct HessianConcentrationReport {
  std::uint64_t sample_size = 0;
  double unrounded_bound = 0.0;
  RegularityConstants constants;
  std::optional<IntrinsicDimension> intrinsic;
  FrequencyEstimate spectrum;        // every restricted eigenvalue within relative eps
  FrequencyEstimate absolute_error;  // ||H - hess F||_K <= eps gamma
  FrequencyEstimate min_eigenvalue;  // lambda_min^K(H) >= (1 - eps) gamma
  FrequencyEstimate ratio;           // ||H - hess F||_K / lambda_min^K(H) <= eps / (1 - eps)
  FrequencyEstimate joint;           // the previous three together
};

/// `trials` independent draws at the size the policy prescribes for x.
HessianConcentrationReport hessian_concentration_experiment(
    const ComponentOracle& oracle, const Vector& x, const SampleSizePolicy& policy, long trials,
    const ConeBasis& basis, const ConcentrationOptions& options = {});

struct GradientConcentrationReport {
  std::uint64_t sample_size = 0;
  double unrounded_bound = 0.0;
  double g_bound = 0.0;
  double max_deviation = 0.0;
  FrequencyEstimate deviation;  // ||g - grad F||_K <= eps
};

GradientConcentrationReport gradient_concentration_experiment(
    const ComponentOracle& oracle, const Vector& x, double epsilon, double delta,
    double g_bound, long trials, const ConeBasis& basis, Replacement replacement,
    const ConcentrationOptions& options = {});

// ---------------------------------------------------------------------------
// Derivative validation

enum class DerivativeOrder { Gradient, Hessian };

/// Worst error |fd - analytic|_inf / max(|analytic|_inf, 1) over the full
/// objective and up to `max_components` leading components, using central
/// differences with step 1e-6 (1 + ||x||).
double finite_difference_check(const ComponentOracle& oracle, const Vector& x,
                               DerivativeOrder order, std::size_t max_components = 20);

/// Random test point with N(0, scale^2) coordinates. For SVM objectives the
/// point is redrawn until every margin 1 - b_i a_i^T x is farther than
/// max(1e-6, 4 h ||a_i||_1) from zero, h being the difference step.
Vector random_test_point(const ComponentOracle& oracle, std::uint64_t seed, double scale = 1.0);

// ---------------------------------------------------------------------------
// Quadratic phase of the regularized drivers

enum class PhaseMode { Spectral, Ridge };

struct PhaseStep {
  long k = 0;
  bool in_region = false;
  double lhs = 0.0;  // ||D_{k+1}||
  double rhs = 0.0;  // xi0 ||D_k||^2
  bool satisfied = true;
};

struct QuadraticPhaseReport {
  bool applicable = false;  // false when L = 0
  double region_threshold = 0.0;
  double lambda_required = 0.0;
  bool lambda_sufficient = false;
  std::vector<PhaseStep> steps;
  bool all_satisfied = true;  // over in-region steps; vacuous when none
};

/// Missing L or gamma is a configuration error.
QuadraticPhaseReport quadratic_phase_check(const std::vector<double>& errors, double lambda,
                                           double xi0, double beta, PhaseMode mode,
                                           std::optional<double> lipschitz,
                                           std::optional<double> gamma, double epsilon);

}  // namespace subnewton
