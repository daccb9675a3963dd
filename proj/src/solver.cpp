#include "subnewton/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "subnewton/error.hpp"
#include "subnewton/rng.hpp"

namespace subnewton {

// ---------------------------------------------------------------------------
// Feasible sets

ConstraintSet ConstraintSet::l1_ball(double radius) {
  require(std::isfinite(radius) && radius > 0.0, ErrorKind::Input,
          "l1-ball radius must be positive and finite");
  ConstraintSet c;
  c.set_ = L1Ball{radius};
  return c;
}

ConstraintSet ConstraintSet::box(Vector lower, Vector upper) {
  require(lower.size() == upper.size(), ErrorKind::Input, "box bounds differ in length");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    require(!std::isnan(lower[i]) && !std::isnan(upper[i]), ErrorKind::Input,
            "box bounds must not be NaN");
    require(lower[i] <= upper[i], ErrorKind::Input, "box requires lower <= upper elementwise");
  }
  ConstraintSet c;
  c.set_ = Box{std::move(lower), std::move(upper)};
  return c;
}

Vector project_l1_ball(const Vector& v, double radius) {
  require(radius > 0.0, ErrorKind::Input, "l1-ball radius must be positive");
  require(all_finite(v), ErrorKind::Input, "cannot project a non-finite vector");
  if (v.lpNorm<1>() <= radius) return v;

  std::vector<double> u(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) u[static_cast<std::size_t>(i)] = std::abs(v[i]);
  std::sort(u.begin(), u.end(), std::greater<>());

  // theta is the soft-threshold that makes the l1 norm equal to the radius.
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }

  Vector w(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double shrunk = std::max(std::abs(v[i]) - theta, 0.0);
    w[i] = std::copysign(shrunk, v[i]);
  }
  // Rounding can leave the norm a few ulps above the radius.
  const double norm = w.lpNorm<1>();
  if (norm > radius) w *= radius / norm;
  return w;
}

Vector ConstraintSet::project(const Vector& x) const {
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Unconstrained>) {
          return x;
        } else if constexpr (std::is_same_v<T, L1Ball>) {
          return project_l1_ball(x, s.radius);
        } else {
          require(x.size() == s.lower.size(), ErrorKind::Input, "box dimension mismatch");
          return x.cwiseMax(s.lower).cwiseMin(s.upper);
        }
      },
      set_);
}

bool ConstraintSet::contains(const Vector& x, double tol) const {
  if (!all_finite(x)) return false;
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Unconstrained>) {
          return true;
        } else if constexpr (std::is_same_v<T, L1Ball>) {
          return x.lpNorm<1>() <= s.radius + tol;
        } else {
          if (x.size() != s.lower.size()) return false;
          return ((x - s.lower).array() >= -tol).all() && ((s.upper - x).array() >= -tol).all();
        }
      },
      set_);
}

std::string ConstraintSet::describe() const {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Unconstrained>) {
          return "unconstrained";
        } else if constexpr (std::is_same_v<T, L1Ball>) {
          std::ostringstream out;
          out << "l1_ball(" << s.radius << ")";
          return out.str();
        } else {
          return "box";
        }
      },
      set_);
}

// ---------------------------------------------------------------------------
// Quadratic model subproblem

namespace {

SubproblemResult solve_unconstrained(const Vector& xk, const Vector& g, const Matrix& h,
                                     double spectral_norm) {
  const Eigen::LLT<Matrix> llt(h);
  require(llt.info() == Eigen::Success, ErrorKind::Curvature,
          "Cholesky factorization of the model Hessian failed");
  const double target = 1e-10 * (1.0 + g.norm());
  Vector d = llt.solve(-g);
  double residual = (h * d + g).norm();
  // Iterative refinement for the ill-conditioned end of the admissible range.
  for (int pass = 0; pass < 3 && residual > target; ++pass) {
    d += llt.solve(-(h * d + g));
    residual = (h * d + g).norm();
  }
  require(all_finite(d), ErrorKind::Numeric, "non-finite Newton direction");
  if (residual > target) {
    std::ostringstream out;
    out << "Newton system residual " << residual << " exceeds " << target
        << " (||H|| = " << spectral_norm << ")";
    fail(ErrorKind::Numeric, out.str());
  }
  return {xk + d, residual, 0};
}

/// Accelerated projected gradient with function-value restart on
/// m(x) = g^T (x - xk) + (x - xk)^T H (x - xk) / 2.
SubproblemResult solve_constrained(const Vector& xk, const Vector& g, const Matrix& h,
                                   double lipschitz, const ConstraintSet& constraint,
                                   const SubproblemOptions& options) {
  const double step = 1.0 / std::max(lipschitz, 1e-300);
  const double target = options.tolerance * (1.0 + g.norm());
  auto model_gradient = [&](const Vector& y) -> Vector { return g + h * (y - xk); };
  auto model_value = [&](const Vector& y) {
    const Vector d = y - xk;
    return g.dot(d) + 0.5 * d.dot(h * d);
  };

  Vector x = constraint.project(xk);
  Vector y = x;
  double t = 1.0;
  double value = model_value(x);
  for (long it = 1; it <= options.max_inner_iterations; ++it) {
    const Vector x_next = constraint.project(y - step * model_gradient(y));
    const double value_next = model_value(x_next);

    // Gradient-mapping norm at x_next is the optimality measure.
    const Vector probe = constraint.project(x_next - step * model_gradient(x_next));
    const double mapping = (x_next - probe).norm() / step;
    if (mapping <= target) return {probe, mapping, it};

    if (value_next > value && t > 1.0) {
      // Restart momentum when the model value goes up. A plain projected
      // step (t == 1) is monotone up to rounding and is always accepted.
      t = 1.0;
      y = x;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_next + ((t - 1.0) / t_next) * (x_next - x);
    x = x_next;
    value = value_next;
    t = t_next;
  }
  std::ostringstream out;
  out << "inner solver did not reach gradient-mapping norm " << target << " within "
      << options.max_inner_iterations << " iterations";
  fail(ErrorKind::Subproblem, out.str());
}

}  // namespace

SubproblemResult solve_quadratic_model(const Vector& xk, const Vector& g, const Matrix& h,
                                       const ConstraintSet& constraint,
                                       const SubproblemOptions& options) {
  const Eigen::Index p = xk.size();
  require(g.size() == p && h.rows() == p && h.cols() == p, ErrorKind::Input,
          "subproblem dimension mismatch");
  require(all_finite(xk) && all_finite(g), ErrorKind::Input, "non-finite subproblem input");
  require(options.tolerance > 0.0 && options.max_inner_iterations > 0, ErrorKind::Input,
          "subproblem options must be positive");
  const Matrix hs = symmetrized(h, "model Hessian");
  const auto eig = symmetric_eigen(hs, false);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(p - 1);
  const double norm = std::max(std::abs(lo), std::abs(hi));

  if (constraint.is_unconstrained()) {
    if (!(lo > 1e-12 * norm) || norm == 0.0) {
      std::ostringstream out;
      out << "model Hessian is not positive definite (lambda_min = " << lo
          << ", ||H|| = " << norm << ")";
      fail(ErrorKind::Curvature, out.str());
    }
    return solve_unconstrained(xk, g, hs, norm);
  }
  if (lo < -1e-12 * norm) {
    std::ostringstream out;
    out << "model Hessian is indefinite (lambda_min = " << lo << ")";
    fail(ErrorKind::Curvature, out.str());
  }
  return solve_constrained(xk, g, hs, hi, constraint, options);
}

// ---------------------------------------------------------------------------
// Accuracy schedules

std::string_view to_string(Schedule schedule) {
  switch (schedule) {
    case Schedule::Constant: return "constant";
    case Schedule::Geometric: return "geometric";
    case Schedule::LogGlobal: return "log_global";
    case Schedule::LogLocal: return "log_local";
    case Schedule::GeometricCompound: return "geometric_compound";
  }
  return "unknown";
}

Schedule parse_schedule(std::string_view name) {
  for (Schedule s : {Schedule::Constant, Schedule::Geometric, Schedule::LogGlobal,
                     Schedule::LogLocal, Schedule::GeometricCompound}) {
    if (name == to_string(s)) return s;
  }
  fail(ErrorKind::Configuration, "unknown schedule '" + std::string(name) + "'");
}

double epsilon_schedule(Schedule schedule, long k, double epsilon, double rho) {
  require(k >= 0, ErrorKind::Input, "iteration index must be nonnegative");
  const double kd = static_cast<double>(k);
  switch (schedule) {
    case Schedule::Constant: return epsilon;
    case Schedule::Geometric: return std::pow(rho, kd) * epsilon;
    case Schedule::LogGlobal: return 1.0 / (1.0 + 2.0 * std::log(4.0 + kd));
    case Schedule::LogLocal: return 1.0 / (1.0 + 4.0 * std::log(4.0 + kd));
    case Schedule::GeometricCompound: return std::pow(rho, kd * (kd + 1.0) / 2.0) * epsilon;
  }
  return epsilon;
}

// ---------------------------------------------------------------------------
// Drivers

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::SubsampledHessian: return "subsampled_hessian";
    case Algorithm::ScheduledHessian: return "scheduled_hessian";
    case Algorithm::SpectralRegularized: return "spectral_regularized";
    case Algorithm::RidgeRegularized: return "ridge_regularized";
    case Algorithm::IndependentGradient: return "independent_gradient";
    case Algorithm::SharedSample: return "shared_sample";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  static constexpr Algorithm kAll[] = {
      Algorithm::SubsampledHessian,   Algorithm::ScheduledHessian,
      Algorithm::SpectralRegularized, Algorithm::RidgeRegularized,
      Algorithm::IndependentGradient, Algorithm::SharedSample};
  for (std::size_t i = 0; i < std::size(kAll); ++i) {
    if (name == to_string(kAll[i]) || name == "alg" + std::to_string(i + 1)) return kAll[i];
  }
  fail(ErrorKind::Configuration, "unknown algorithm '" + std::string(name) + "'");
}

namespace {

bool open_unit(double v) { return std::isfinite(v) && v > 0.0 && v < 1.0; }

void check_field(bool ok, const char* field, const std::string& what) {
  if (!ok) fail(ErrorKind::Configuration, std::string(field) + ": " + what);
}

bool uses_gradient_sampling(Algorithm a) {
  return a == Algorithm::IndependentGradient || a == Algorithm::SharedSample;
}

}  // namespace

void AlgorithmConfig::validate() const {
  check_field(open_unit(epsilon), "epsilon", "must lie in (0, 1)");
  check_field(open_unit(delta), "delta", "must lie in (0, 1)");
  check_field(open_unit(rho), "rho", "must lie in (0, 1)");
  if (algorithm == Algorithm::IndependentGradient)
    check_field(open_unit(epsilon_gradient), "epsilon2", "must lie in (0, 1)");
  if (algorithm == Algorithm::SpectralRegularized)
    check_field(open_unit(epsilon_pilot), "epsilon0", "must lie in (0, 1)");
  if (algorithm == Algorithm::RidgeRegularized)
    check_field(std::isfinite(lambda) && lambda >= 0.0, "lambda", "must be >= 0");
  const bool scheduled =
      algorithm == Algorithm::ScheduledHessian || algorithm == Algorithm::SharedSample;
  check_field(scheduled || schedule == Schedule::Constant, "schedule",
              "only the scheduled-Hessian and shared-sample drivers take a schedule");
  check_field(size_variant != SizeVariant::Gradient, "variant",
              "must be a Hessian size variant");
  if (hessian_sampling.kind == SampleSizeMode::Kind::Bound) {
    check_field(kappa.has_value(), "kappa", "required when Hessian sizes come from the bound");
    check_field(std::isfinite(*kappa) && *kappa >= 1.0, "kappa", "must be >= 1");
    if (size_variant == SizeVariant::HessianIntrinsic) {
      check_field(intrinsic_dimension.has_value(), "intrinsic_dimension",
                  "required by the intrinsic-dimension variant");
      check_field(replacement == Replacement::With, "replacement",
                  "intrinsic-dimension variant samples with replacement");
    }
  }
  if (hessian_sampling.kind == SampleSizeMode::Kind::Fixed)
    check_field(hessian_sampling.fixed >= 1, "hessian_sample", "must be >= 1");
  check_field(uses_gradient_sampling(algorithm) ||
                  gradient_sampling.kind == SampleSizeMode::Kind::Bound,
              "gradient_sample", "only the gradient-sampling drivers take a gradient sample mode");
  if (gradient_sampling.kind == SampleSizeMode::Kind::Fixed)
    check_field(gradient_sampling.fixed >= 1, "gradient_sample", "must be >= 1");
  if (gradient_bound.kind == GradientBoundSource::Kind::Fixed)
    check_field(std::isfinite(gradient_bound.value) && gradient_bound.value > 0.0,
                "gradient_bound", "must be positive");
  check_field(max_iterations >= 1, "max_iterations", "must be >= 1");
  check_field(std::isfinite(tolerance) && tolerance >= 0.0, "tolerance", "must be >= 0");
  check_field(subproblem.tolerance > 0.0, "subproblem.tolerance", "must be positive");
  check_field(subproblem.max_inner_iterations >= 1, "subproblem.max_inner_iterations",
              "must be >= 1");
}

void IterationTrace::append(IterationRecord record) {
  require(records_.empty() || record.k > records_.back().k, ErrorKind::Input,
          "trace iteration indices must strictly increase");
  records_.push_back(std::move(record));
}

std::vector<double> IterationTrace::errors(const Vector& x_star) const {
  std::vector<double> out;
  out.reserve(records_.size());
  for (const auto& r : records_) {
    require(r.x.size() == x_star.size(), ErrorKind::Input, "reference dimension mismatch");
    out.push_back((r.x - x_star).norm());
  }
  return out;
}

namespace {

class Driver {
 public:
  Driver(const AlgorithmConfig& config, const ComponentOracle& oracle)
      : c_(config), o_(oracle), n_(oracle.n()) {}

  /// Model at x_k; fills the sampling fields of `rec`.
  SubsampledModel build(long k, const Vector& x, IterationRecord& rec) const {
    SubsampledModel m;
    switch (c_.algorithm) {
      case Algorithm::SubsampledHessian:
      case Algorithm::ScheduledHessian:
      case Algorithm::RidgeRegularized: {
        const double eps = c_.algorithm == Algorithm::ScheduledHessian
                               ? epsilon_schedule(c_.schedule, k, c_.epsilon, c_.rho)
                               : c_.epsilon;
        rec.eps_k = eps;
        const SampleSet s = hessian_draw(k, eps, StreamPurpose::Hessian);
        m.h = assemble_subsampled_hessian(o_, x, s);
        m.samples.push_back({"hessian", s.size(), s.seed()});
        rec.sample_hess = s.size();
        full_gradient(x, m, rec);
        if (c_.algorithm == Algorithm::RidgeRegularized) {
          m.h = ridge_shift(m.h, c_.lambda);
          m.regularization = "ridge";
          m.lambda = c_.lambda;
          rec.lambda_k = c_.lambda;
        }
        break;
      }
      case Algorithm::SpectralRegularized: {
        rec.eps_k = c_.epsilon;
        const SampleSet pilot = hessian_draw(k, c_.epsilon_pilot, StreamPurpose::Pilot);
        const Matrix h0 = assemble_subsampled_hessian(o_, x, pilot);
        const double lambda =
            spectral_threshold(h0, c_.epsilon, c_.epsilon_pilot, o_.p(), c_.threshold_rule);
        const SampleSet s = hessian_draw(k, c_.epsilon, StreamPurpose::Hessian);
        m.h = spectral_floor(assemble_subsampled_hessian(o_, x, s), lambda);
        m.samples.push_back({"pilot", pilot.size(), pilot.seed()});
        m.samples.push_back({"hessian", s.size(), s.seed()});
        m.regularization = "spectral";
        m.lambda = lambda;
        rec.sample_pilot = pilot.size();
        rec.sample_hess = s.size();
        rec.lambda_k = lambda;
        full_gradient(x, m, rec);
        break;
      }
      case Algorithm::IndependentGradient: {
        rec.eps_k = c_.epsilon;
        const double eps2 = std::pow(c_.rho, static_cast<double>(k)) * c_.epsilon_gradient;
        rec.eps_grad_k = eps2;
        const SampleSet sh = hessian_draw(k, c_.epsilon, StreamPurpose::Hessian);
        const SampleSet sg = gradient_draw(k, x, eps2, StreamPurpose::Gradient, rec);
        m.h = assemble_subsampled_hessian(o_, x, sh);
        m.g = assemble_subsampled_gradient(o_, x, sg);
        m.samples.push_back({"hessian", sh.size(), sh.seed()});
        m.samples.push_back({"gradient", sg.size(), sg.seed()});
        rec.sample_hess = sh.size();
        rec.sample_grad = sg.size();
        break;
      }
      case Algorithm::SharedSample: {
        const double eps = epsilon_schedule(c_.schedule, k, c_.epsilon, c_.rho);
        rec.eps_k = eps;
        rec.eps_grad_k = eps;
        const std::uint64_t key = derive_stream_key(c_.seed, static_cast<std::uint64_t>(k),
                                                    StreamPurpose::Shared);
        const bool full = c_.hessian_sampling.kind == SampleSizeMode::Kind::Full ||
                          c_.gradient_sampling.kind == SampleSizeMode::Kind::Full;
        SampleSet s;
        if (full) {
          s = SampleSet::full(n_);
        } else {
          const std::uint64_t size =
              std::max(hessian_size(eps), gradient_size(x, eps, rec));
          s = draw_sample(n_, clamp(size), c_.replacement, key);
        }
        m.h = assemble_subsampled_hessian(o_, x, s);
        m.g = assemble_subsampled_gradient(o_, x, s);
        m.samples.push_back({"shared", s.size(), s.seed()});
        rec.sample_hess = s.size();
        rec.sample_grad = s.size();
        break;
      }
    }
    return m;
  }

 private:
  std::uint64_t clamp(std::uint64_t size) const {
    return c_.replacement == Replacement::Without ? std::min<std::uint64_t>(size, n_) : size;
  }

  std::uint64_t hessian_size(double eps) const {
    switch (c_.hessian_sampling.kind) {
      case SampleSizeMode::Kind::Full: return n_;
      case SampleSizeMode::Kind::Fixed: return c_.hessian_sampling.fixed;
      case SampleSizeMode::Kind::Bound: break;
    }
    SampleSizePolicy policy;
    policy.variant = c_.size_variant;
    policy.epsilon = eps;
    policy.delta = c_.delta;
    policy.replacement = c_.replacement;
    policy.kappa_power = c_.kappa_power;
    return hessian_sample_size(policy, *c_.kappa, o_.p(), c_.intrinsic_dimension);
  }

  double gradient_bound_at(const Vector& x) const {
    switch (c_.gradient_bound.kind) {
      case GradientBoundSource::Kind::Uniform: return gradient_bound(o_, std::nullopt);
      case GradientBoundSource::Kind::Pointwise: return gradient_bound(o_, x);
      case GradientBoundSource::Kind::Exact: return exact_gradient_bound(o_, x);
      case GradientBoundSource::Kind::Fixed: return c_.gradient_bound.value;
    }
    return 0.0;
  }

  std::uint64_t gradient_size(const Vector& x, double eps, IterationRecord& rec) const {
    switch (c_.gradient_sampling.kind) {
      case SampleSizeMode::Kind::Full: return n_;
      case SampleSizeMode::Kind::Fixed: return c_.gradient_sampling.fixed;
      case SampleSizeMode::Kind::Bound: break;
    }
    const double g = gradient_bound_at(x);
    rec.grad_bound = g;
    // A zero bound means every component gradient vanishes; one draw suffices.
    if (g <= 0.0) return 1;
    return gradient_sample_size(g, eps, c_.delta);
  }

  SampleSet hessian_draw(long k, double eps, StreamPurpose purpose) const {
    if (c_.hessian_sampling.kind == SampleSizeMode::Kind::Full) return SampleSet::full(n_);
    const std::uint64_t key =
        derive_stream_key(c_.seed, static_cast<std::uint64_t>(k), purpose);
    return draw_sample(n_, clamp(hessian_size(eps)), c_.replacement, key);
  }

  SampleSet gradient_draw(long k, const Vector& x, double eps, StreamPurpose purpose,
                          IterationRecord& rec) const {
    if (c_.gradient_sampling.kind == SampleSizeMode::Kind::Full) return SampleSet::full(n_);
    const std::uint64_t key =
        derive_stream_key(c_.seed, static_cast<std::uint64_t>(k), purpose);
    return draw_sample(n_, clamp(gradient_size(x, eps, rec)), c_.replacement, key);
  }

  void full_gradient(const Vector& x, SubsampledModel& m, IterationRecord& rec) const {
    m.g = o_.full_gradient(x);
    m.samples.push_back({"full-gradient", n_, 0});
    rec.sample_grad = n_;
  }

  const AlgorithmConfig& c_;
  const ComponentOracle& o_;
  std::size_t n_;
};

}  // namespace

IterationTrace run_algorithm(const AlgorithmConfig& config, const ComponentOracle& oracle,
                             const ConstraintSet& constraint, const Vector& x0,
                             const std::optional<Vector>& x_star, const RecordSink& sink) {
  config.validate();
  require(x0.size() == oracle.p(), ErrorKind::Input, "x0 has the wrong dimension");
  require(constraint.contains(x0), ErrorKind::Input, "x0 is infeasible for the constraint");
  if (x_star) require(x_star->size() == oracle.p(), ErrorKind::Input, "x* has the wrong dimension");

  const Driver driver(config, oracle);
  IterationTrace trace;
  auto emit = [&](IterationRecord rec) {
    if (x_star) rec.err = (rec.x - *x_star).norm();
    if (sink) sink(rec);
    trace.append(std::move(rec));
  };

  Vector x = x0;
  for (long k = 0;; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.x = x;
    if (k == config.max_iterations) {
      trace.termination = Termination::MaxIterations;
      emit(std::move(rec));
      break;
    }
    SubproblemResult step;
    try {
      const SubsampledModel model = driver.build(k, x, rec);
      step = solve_quadratic_model(x, model.g, model.h, constraint, config.subproblem);
    } catch (const Error& e) {
      fail(e.kind(), "iteration " + std::to_string(k) + ": " + e.detail());
    }
    rec.model_residual = step.residual;
    rec.inner_iterations = step.inner_iterations;
    const double step_norm = (step.x - x).norm();
    rec.step_norm = step_norm;
    const bool converged = step_norm <= config.tolerance * (1.0 + x.norm());
    emit(std::move(rec));
    if (converged) {
      trace.termination = Termination::Tolerance;
      break;
    }
    x = step.x;
  }
  return trace;
}

}  // namespace subnewton
