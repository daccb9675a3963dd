#include "subnewton/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "subnewton/error.hpp"
#include "subnewton/rng.hpp"

namespace subnewton {

RegularityConstants regularity_constants_at(const ComponentOracle& oracle, const Vector& x,
                                            const ConeBasis& basis) {
  require(basis.ambient_dim() == oracle.p(), ErrorKind::Input, "basis dimension mismatch");
  RegularityConstants out;
  for (std::size_t i = 0; i < oracle.n(); ++i)
    out.k_bound = std::max(out.k_bound, restricted_matrix_norm(oracle.component_hessian(i, x), basis));
  out.gamma = restricted_min_eigenvalue(oracle.full_hessian(x), basis);
  out.kappa = restricted_condition_number(out.k_bound, out.gamma);
  return out;
}

// ---------------------------------------------------------------------------
// Ground truth

namespace {

double constrained_optimality(const ComponentOracle& oracle, const ConstraintSet& constraint,
                              const Vector& x, const ReferenceOptions& options) {
  const Vector g = oracle.full_gradient(x);
  const Eigen::Index p = x.size();
  std::vector<Vector> probes;
  // Axis moves of several lengths, then random feasible points.
  for (double len : {1e-3, 1e-1, 1.0, 10.0}) {
    for (Eigen::Index j = 0; j < p; ++j) {
      for (double sign : {-1.0, 1.0}) {
        Vector y = x;
        y[j] += sign * len;
        probes.push_back(constraint.project(y));
      }
    }
  }
  CounterRng rng(derive_stream_key(options.seed, 0, StreamPurpose::Trial));
  for (int t = 0; t < options.feasible_directions; ++t) {
    Vector y(p);
    for (Eigen::Index j = 0; j < p; ++j) y[j] = x[j] + 2.0 * rng.normal();
    probes.push_back(constraint.project(y));
  }
  double worst = 0.0;
  for (const auto& y : probes) worst = std::min(worst, g.dot(y - x));
  return -worst;
}

}  // namespace

ReferenceSolution reference_minimizer(const ComponentOracle& oracle,
                                      const ConstraintSet& constraint,
                                      const ReferenceOptions& options) {
  SubproblemOptions inner;
  inner.tolerance = options.inner_tolerance;
  ReferenceSolution out;
  Vector x = constraint.project(Vector::Zero(oracle.p()));
  double previous_step = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (long it = 0; it < options.max_iterations; ++it) {
    SubproblemResult step;
    try {
      step = solve_quadratic_model(x, oracle.full_gradient(x), oracle.full_hessian(x), constraint,
                                   inner);
    } catch (const Error& e) {
      fail(ErrorKind::Reference, "full Newton failed at iteration " + std::to_string(it) + ": " +
                                     e.detail());
    }
    const double step_norm = (step.x - x).norm();
    const double scale = 1.0 + x.norm();
    x = step.x;
    out.iterations = it + 1;
    if (step_norm <= options.step_tolerance * scale) {
      converged = true;
      break;
    }
    // Rounding floor: the step stopped shrinking at a negligible size.
    if (it >= 2 && step_norm >= previous_step && step_norm <= 1e-9 * scale) {
      converged = true;
      break;
    }
    previous_step = step_norm;
  }
  if (!converged) {
    fail(ErrorKind::Reference, "full Newton did not converge within " +
                                   std::to_string(options.max_iterations) + " iterations");
  }
  out.x = x;
  if (constraint.is_unconstrained()) {
    out.optimality = oracle.full_gradient(x).norm();
    if (out.optimality > options.gradient_tolerance) {
      std::ostringstream msg;
      msg << "gradient norm " << out.optimality << " at the reference point exceeds "
          << options.gradient_tolerance;
      fail(ErrorKind::Reference, msg.str());
    }
  } else {
    out.optimality = constrained_optimality(oracle, constraint, x, options);
    if (out.optimality > options.directional_tolerance) {
      std::ostringstream msg;
      msg << "directional derivative -" << out.optimality << " at the reference point";
      fail(ErrorKind::Reference, msg.str());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recursion and rates

RecursionReport recursion_check(const std::vector<double>& errors,
                                const std::vector<std::optional<RecursionConstants>>& per_step,
                                double slack, double noise_floor) {
  require(slack >= 0.0 && noise_floor >= 0.0, ErrorKind::Input,
          "slack and noise floor must be nonnegative");
  RecursionReport out;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    if (k >= per_step.size() || !per_step[k]) continue;
    const RecursionConstants& c = *per_step[k];
    require(c.rho0 >= 0.0 && c.xi >= 0.0 && c.eta >= 0.0, ErrorKind::Input,
            "recursion constants must be nonnegative");
    StepCheck s;
    s.k = static_cast<long>(k);
    s.lhs = errors[k + 1];
    s.rhs = c.eta + c.rho0 * errors[k] + c.xi * errors[k] * errors[k];
    s.margin = s.rhs - s.lhs;
    s.satisfied = s.lhs <= s.rhs * (1.0 + slack) + noise_floor;
    out.satisfied += s.satisfied ? 1 : 0;
    out.steps.push_back(s);
  }
  if (!out.steps.empty())
    out.frequency = static_cast<double>(out.satisfied) / static_cast<double>(out.steps.size());
  return out;
}

RecursionReport recursion_check(const std::vector<double>& errors, double rho0, double xi,
                                double eta, double slack, double noise_floor) {
  const std::vector<std::optional<RecursionConstants>> per_step(
      errors.empty() ? 0 : errors.size() - 1, RecursionConstants{eta, rho0, xi});
  return recursion_check(errors, per_step, slack, noise_floor);
}

RecursionReport recursion_check(const IterationTrace& trace, const std::optional<Vector>& x_star,
                                double rho0, double xi, double eta, double slack,
                                double noise_floor) {
  require(x_star.has_value(), ErrorKind::Configuration, "recursion check needs x*");
  return recursion_check(trace.errors(*x_star), rho0, xi, eta, slack, noise_floor);
}

RateReport fit_rates(const std::vector<double>& errors, const RateOptions& options) {
  require(errors.size() >= 3, ErrorKind::InsufficientData,
          "rate fitting needs at least 3 error values");
  for (double e : errors)
    require(std::isfinite(e) && e >= 0.0, ErrorKind::Input, "errors must be finite and >= 0");
  require(options.tail >= 0, ErrorKind::Input, "tail must be nonnegative");

  RateReport r;
  r.errors = errors;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double floor = options.noise_floor;
  for (std::size_t j = 0; j + 1 < errors.size(); ++j) {
    const bool valid = errors[j] > floor && errors[j + 1] > floor && errors[j] > 0.0;
    r.ratios.push_back(valid ? errors[j + 1] / errors[j] : nan);
  }

  std::vector<long> valid;
  for (std::size_t j = 0; j < r.ratios.size(); ++j)
    if (!std::isnan(r.ratios[j])) valid.push_back(static_cast<long>(j));
  const std::size_t take =
      options.tail == 0 ? valid.size()
                        : std::min(valid.size(), static_cast<std::size_t>(options.tail));
  r.tail_indices.assign(valid.end() - static_cast<std::ptrdiff_t>(take), valid.end());

  for (long j : r.tail_indices) r.q_linear_ratio = std::max(r.q_linear_ratio, r.ratios[j]);
  r.superlinear = r.tail_indices.size() >= 2;
  for (std::size_t t = 1; t < r.tail_indices.size(); ++t) {
    const double prev = r.ratios[r.tail_indices[t - 1]];
    const double cur = r.ratios[r.tail_indices[t]];
    if (!(cur < prev * (1.0 - options.strictness))) r.superlinear = false;
  }

  if (options.rho0 && options.xi) {
    for (std::size_t k = 0; k < errors.size(); ++k) {
      if (*options.rho0 * errors[k] >= *options.xi * errors[k] * errors[k]) {
        r.phase_index = static_cast<long>(k);
        break;
      }
    }
  }

  r.envelope_sigma = errors[0];
  if (errors[0] > 0.0) {
    for (std::size_t k = 1; k < errors.size(); ++k) {
      const double rate = std::pow(errors[k] / errors[0], 1.0 / static_cast<double>(k));
      r.envelope_rho = std::max(r.envelope_rho, rate);
    }
  }

  const double grow = 1.0 + options.slack;
  const double rho = options.rho.value_or(r.q_linear_ratio);
  const double sigma = options.sigma.value_or(errors[0]);
  r.q_linear = true;
  for (long j : r.tail_indices) r.q_linear = r.q_linear && r.ratios[j] <= rho * grow;
  r.q_superlinear = true;
  r.slow_growth = true;
  for (long j : valid) {
    const double k = static_cast<double>(j + 1);  // ratio into x_k
    r.q_superlinear = r.q_superlinear && r.ratios[j] <= std::pow(rho, k) * grow;
    r.slow_growth = r.slow_growth && r.ratios[j] <= grow / std::log(3.0 + k);
  }
  r.r_linear = true;
  r.r_superlinear = true;
  if (rho > 0.0 && rho < 1.0) {
    const auto tau = superlinear_envelope(rho, static_cast<long>(errors.size()) - 1);
    for (std::size_t k = 0; k < errors.size(); ++k) {
      const double e = errors[k];
      if (e <= floor) continue;
      r.r_linear = r.r_linear && e <= std::pow(rho, static_cast<double>(k)) * sigma * grow;
      r.r_superlinear = r.r_superlinear && e <= tau[k] * sigma * grow;
    }
  } else {
    r.r_linear = r.r_superlinear = false;
  }
  return r;
}

RateReport fit_rates(const IterationTrace& trace, const std::optional<Vector>& x_star,
                     const RateOptions& options) {
  require(x_star.has_value(), ErrorKind::Configuration, "rate fitting needs x*");
  return fit_rates(trace.errors(*x_star), options);
}

// ---------------------------------------------------------------------------
// Monte-Carlo concentration

std::pair<double, double> wilson_interval(long successes, long trials, double z) {
  require(trials > 0 && successes >= 0 && successes <= trials, ErrorKind::Input,
          "invalid success count");
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (phat + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

FrequencyEstimate wilson_estimate(long successes, long trials) {
  constexpr double kTwoSided95 = 1.959963984540054;
  constexpr double kOneSided95 = 1.6448536269514722;
  FrequencyEstimate f;
  f.successes = successes;
  f.trials = trials;
  f.frequency = static_cast<double>(successes) / static_cast<double>(trials);
  std::tie(f.lower, f.upper) = wilson_interval(successes, trials, kTwoSided95);
  f.one_sided_lower = wilson_interval(successes, trials, kOneSided95).first;
  return f;
}

namespace {

std::uint64_t scaled_size(std::uint64_t computed, const ConcentrationOptions& options) {
  if (options.size_override) {
    require(*options.size_override >= 1, ErrorKind::Input, "size override must be >= 1");
    return *options.size_override;
  }
  require(options.size_scale > 0.0, ErrorKind::Input, "size scale must be positive");
  if (options.size_scale == 1.0) return computed;
  return ceil_sample_count(static_cast<double>(computed) * options.size_scale);
}

std::uint64_t trial_seed(const ConcentrationOptions& options, long t) {
  return derive_stream_key(options.seed, static_cast<std::uint64_t>(t), StreamPurpose::Trial);
}

}  // namespace

HessianConcentrationReport hessian_concentration_experiment(
    const ComponentOracle& oracle, const Vector& x, const SampleSizePolicy& policy, long trials,
    const ConeBasis& basis, const ConcentrationOptions& options) {
  policy.validate();
  require(policy.variant != SizeVariant::Gradient, ErrorKind::Policy,
          "Hessian experiment needs a Hessian size variant");
  require(trials >= 100, ErrorKind::Input, "concentration experiments need at least 100 trials");
  require(basis.ambient_dim() == oracle.p(), ErrorKind::Input, "basis dimension mismatch");

  HessianConcentrationReport rep;
  rep.constants = regularity_constants_at(oracle, x, basis);
  const double kappa = options.kappa.value_or(rep.constants.kappa);
  std::optional<double> d;
  if (policy.variant == SizeVariant::HessianIntrinsic) {
    rep.intrinsic = intrinsic_dimension_at(oracle, x, basis, 1);
    d = rep.intrinsic->unscaled;
  }
  rep.unrounded_bound = hessian_sample_bound(policy, kappa, basis.dim(), d);
  std::uint64_t size = scaled_size(hessian_sample_size(policy, kappa, basis.dim(), d), options);
  if (policy.replacement == Replacement::Without) size = std::min<std::uint64_t>(size, oracle.n());
  rep.sample_size = size;

  const Matrix full = oracle.full_hessian(x);
  const std::vector<double> full_eigs = restricted_eigenvalues(full, basis).eigenvalues;
  const double eps = policy.epsilon;
  const double gamma = rep.constants.gamma;

  long spectrum = 0, absolute = 0, mineig = 0, ratio = 0, joint = 0;
  for (long t = 0; t < trials; ++t) {
    const SampleSet s = draw_sample(oracle.n(), size, policy.replacement, trial_seed(options, t));
    const Matrix h = assemble_subsampled_hessian(oracle, x, s);
    const RestrictedSpectrum spec = restricted_eigenvalues(h, basis);
    bool in_band = true;
    for (std::size_t i = 0; i < full_eigs.size(); ++i)
      in_band = in_band && std::abs(full_eigs[i] - spec.eigenvalues[i]) <= eps * full_eigs[i];
    const double dev = restricted_matrix_norm(h - full, basis);
    const bool a = dev <= eps * gamma;
    const bool m = spec.min >= (1.0 - eps) * gamma;
    const bool r = spec.min > 0.0 && dev / spec.min <= eps / (1.0 - eps);
    spectrum += in_band;
    absolute += a;
    mineig += m;
    ratio += r;
    joint += a && m && r;
  }
  rep.spectrum = wilson_estimate(spectrum, trials);
  rep.absolute_error = wilson_estimate(absolute, trials);
  rep.min_eigenvalue = wilson_estimate(mineig, trials);
  rep.ratio = wilson_estimate(ratio, trials);
  rep.joint = wilson_estimate(joint, trials);
  return rep;
}

GradientConcentrationReport gradient_concentration_experiment(
    const ComponentOracle& oracle, const Vector& x, double epsilon, double delta,
    double g_bound, long trials, const ConeBasis& basis, Replacement replacement,
    const ConcentrationOptions& options) {
  require(trials >= 100, ErrorKind::Input, "concentration experiments need at least 100 trials");
  require(basis.ambient_dim() == oracle.p(), ErrorKind::Input, "basis dimension mismatch");
  GradientConcentrationReport rep;
  rep.g_bound = g_bound;
  rep.unrounded_bound = gradient_sample_bound(g_bound, epsilon, delta);
  std::uint64_t size = scaled_size(gradient_sample_size(g_bound, epsilon, delta), options);
  if (replacement == Replacement::Without) size = std::min<std::uint64_t>(size, oracle.n());
  rep.sample_size = size;

  const Vector full = oracle.full_gradient(x);
  long ok = 0;
  for (long t = 0; t < trials; ++t) {
    const SampleSet s = draw_sample(oracle.n(), size, replacement, trial_seed(options, t));
    const double dev =
        restricted_vector_norm(assemble_subsampled_gradient(oracle, x, s) - full, basis);
    rep.max_deviation = std::max(rep.max_deviation, dev);
    ok += dev <= epsilon;
  }
  rep.deviation = wilson_estimate(ok, trials);
  return rep;
}

// ---------------------------------------------------------------------------
// Derivative validation

namespace {

double relative_error(const Matrix& fd, const Matrix& analytic) {
  const double scale = std::max(analytic.cwiseAbs().maxCoeff(), 1.0);
  return (fd - analytic).cwiseAbs().maxCoeff() / scale;
}

double fd_step(const Vector& x) { return 1e-6 * (1.0 + x.norm()); }

}  // namespace

double finite_difference_check(const ComponentOracle& oracle, const Vector& x,
                               DerivativeOrder order, std::size_t max_components) {
  require(x.size() == oracle.p() && all_finite(x), ErrorKind::Input,
          "finite-difference point must be finite with dimension p");
  const Eigen::Index p = x.size();
  const double h = fd_step(x);

  // index n stands for the full objective
  const std::size_t count = std::min(max_components, oracle.n());
  double worst = 0.0;
  for (std::size_t c = 0; c <= count; ++c) {
    const bool full = c == count;
    if (order == DerivativeOrder::Gradient) {
      auto value = [&](const Vector& y) {
        return full ? oracle.full_value(y) : oracle.component_value(c, y);
      };
      Vector fd(p);
      for (Eigen::Index j = 0; j < p; ++j) {
        Vector up = x, down = x;
        up[j] += h;
        down[j] -= h;
        fd[j] = (value(up) - value(down)) / (2.0 * h);
      }
      const Vector an = full ? oracle.full_gradient(x) : oracle.component_gradient(c, x);
      worst = std::max(worst, relative_error(fd, an));
    } else {
      auto grad = [&](const Vector& y) -> Vector {
        return full ? oracle.full_gradient(y) : oracle.component_gradient(c, y);
      };
      Matrix fd(p, p);
      for (Eigen::Index j = 0; j < p; ++j) {
        Vector up = x, down = x;
        up[j] += h;
        down[j] -= h;
        fd.col(j) = (grad(up) - grad(down)) / (2.0 * h);
      }
      const Matrix an = full ? oracle.full_hessian(x) : oracle.component_hessian(c, x);
      worst = std::max(worst, relative_error(fd, an));
    }
  }
  return worst;
}

Vector random_test_point(const ComponentOracle& oracle, std::uint64_t seed, double scale) {
  require(scale > 0.0, ErrorKind::Input, "scale must be positive");
  const Eigen::Index p = oracle.p();
  CounterRng rng(derive_stream_key(seed, 0, StreamPurpose::Start));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vector x(p);
    for (Eigen::Index j = 0; j < p; ++j) x[j] = scale * rng.normal();
    if (oracle.kind() != ObjectiveKind::SvmQuadHinge) return x;
    const double h = fd_step(x);
    const auto& a = oracle.data().features;
    const auto& b = oracle.data().labels;
    bool clear = true;
    for (Eigen::Index i = 0; i < a.rows() && clear; ++i) {
      const double margin = 1.0 - b[i] * a.row(i).dot(x);
      clear = std::abs(margin) > std::max(1e-6, 4.0 * h * a.row(i).lpNorm<1>());
    }
    if (clear) return x;
  }
  fail(ErrorKind::Input, "could not find a point away from the SVM hinge boundaries");
}

// ---------------------------------------------------------------------------
// Quadratic phase

QuadraticPhaseReport quadratic_phase_check(const std::vector<double>& errors, double lambda,
                                           double xi0, double beta, PhaseMode mode,
                                           std::optional<double> lipschitz,
                                           std::optional<double> gamma, double epsilon) {
  require(lipschitz.has_value() && gamma.has_value(), ErrorKind::Configuration,
          "quadratic phase check needs L and gamma");
  QuadraticPhaseReport rep;
  if (*lipschitz == 0.0) return rep;
  const QuadraticPhase phase = mode == PhaseMode::Spectral
                                   ? spectral_quadratic_phase(*lipschitz, *gamma, epsilon, xi0, beta)
                                   : ridge_quadratic_phase(*lipschitz, *gamma, epsilon, xi0, beta);
  rep.applicable = true;
  rep.region_threshold = phase.region_threshold;
  rep.lambda_required = phase.lambda_required;
  rep.lambda_sufficient = lambda >= phase.lambda_required;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    PhaseStep s;
    s.k = static_cast<long>(k);
    s.in_region = errors[k] >= phase.region_threshold;
    s.lhs = errors[k + 1];
    s.rhs = xi0 * errors[k] * errors[k];
    s.satisfied = !s.in_region || s.lhs <= s.rhs;
    rep.all_satisfied = rep.all_satisfied && s.satisfied;
    rep.steps.push_back(s);
  }
  return rep;
}

}  // namespace subnewton
