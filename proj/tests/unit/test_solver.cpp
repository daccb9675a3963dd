#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "subnewton/error.hpp"
#include "subnewton/harness.hpp"
#include "subnewton/solver.hpp"

using namespace subnewton;

namespace {

Matrix random_spd(int p, std::uint64_t seed) {
  const Matrix m = oracle::random_symmetric(p, seed);
  return m * m + 0.5 * Matrix::Identity(p, p);
}

SyntheticProblem quadratic(std::size_t n, Eigen::Index p, std::uint64_t seed, double cond = 4.0) {
  SyntheticSpec spec;
  spec.kind = ObjectiveKind::SyntheticQuadratic;
  spec.n = n;
  spec.p = p;
  spec.seed = seed;
  spec.conditioning = cond;
  return make_synthetic(spec);
}

AlgorithmConfig full_newton(Algorithm alg) {
  AlgorithmConfig c;
  c.algorithm = alg;
  c.hessian_sampling = SampleSizeMode::full();
  c.max_iterations = 10;
  return c;
}

}  // namespace

TEST_CASE("constraint sets") {
  CHECK_THROWS_AS(ConstraintSet::l1_ball(0.0), Error);
  CHECK_THROWS_AS(ConstraintSet::box(Vector::Constant(2, 1.0), Vector::Zero(2)), Error);
  const auto box = ConstraintSet::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
  Vector v(2);
  v << 3.0, -0.5;
  const Vector pv = box.project(v);
  CHECK(pv[0] == 1.0);
  CHECK(pv[1] == -0.5);
  CHECK(box.contains(pv));
  CHECK_FALSE(box.contains(v));
  CHECK(ConstraintSet::unconstrained().project(v) == v);
}

TEST_CASE("l1 projection matches bisection") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Vector v = oracle::random_vector(7, s, 1.5);
    for (double r : {0.1, 1.0, 3.0, 50.0}) {
      const Vector a = project_l1_ball(v, r);
      CHECK((a - oracle::project_l1_bisection(v, r)).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(a.lpNorm<1>() <= r * (1.0 + 1e-15));
    }
  }
}

TEST_CASE("model subproblem trivial cases") {
  const Matrix h = random_spd(4, 3);
  const Vector xk = oracle::random_vector(4, 7);
  CHECK((solve_quadratic_model(xk, Vector::Zero(4), h, {}).x - xk).norm() <= 1e-14);

  const Vector g = oracle::random_vector(4, 8);
  const auto step = solve_quadratic_model(xk, g, Matrix::Identity(4, 4), {});
  CHECK((step.x - (xk - g)).norm() <= 1e-14);
  CHECK(step.residual <= 1e-10 * (1.0 + g.norm()));
}

TEST_CASE("model subproblem over the l1 ball with identity curvature") {
  const auto ball = ConstraintSet::l1_ball(1.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Vector xk = project_l1_ball(oracle::random_vector(5, s), 1.0);
    const Vector g = oracle::random_vector(5, 100 + s, 2.0);
    REQUIRE((xk - g).lpNorm<1>() > 1.0);
    const auto r = solve_quadratic_model(xk, g, Matrix::Identity(5, 5), ball);
    CHECK((r.x - oracle::project_l1_bisection(xk - g, 1.0)).norm() <= 1e-9);
    CHECK(r.x.lpNorm<1>() <= 1.0 + 1e-12);
  }
}

TEST_CASE("constrained model solution satisfies the variational inequality") {
  const auto ball = ConstraintSet::l1_ball(0.5);
  const Matrix h = random_spd(4, 11);
  const Vector g = oracle::random_vector(4, 12, 3.0);
  const Vector xk = Vector::Zero(4);
  const auto r = solve_quadratic_model(xk, g, h, ball);
  const Vector grad = g + h * (r.x - xk);
  oracle::Lcg rng(3);
  for (int t = 0; t < 500; ++t) {
    Vector y(4);
    for (int j = 0; j < 4; ++j) y[j] = rng.normal();
    y = project_l1_ball(y, 0.5);
    CHECK(grad.dot(y - r.x) >= -1e-8);
  }
}

TEST_CASE("model subproblem errors") {
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  try {
    solve_quadratic_model(Vector::Zero(2), Vector::Ones(2), indefinite, {});
    FAIL("expected a curvature error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Curvature);
  }
  try {
    solve_quadratic_model(Vector::Zero(2), Vector::Ones(2), indefinite, ConstraintSet::l1_ball(1.0));
    FAIL("expected a curvature error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Curvature);
  }
  SubproblemOptions tight;
  tight.max_inner_iterations = 2;
  Matrix ill = Matrix::Identity(3, 3);
  ill(0, 0) = 1e-4;
  try {
    solve_quadratic_model(Vector::Zero(3), Vector::Constant(3, 5.0), ill,
                          ConstraintSet::l1_ball(1.0), tight);
    FAIL("expected a subproblem error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Subproblem);
  }
}

TEST_CASE("scale covariance of the Newton step") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix h = random_spd(4, 20 + s);
    const Vector g = oracle::random_vector(4, 40 + s);
    Matrix a = oracle::random_symmetric(4, 60 + s) + 4.0 * Matrix::Identity(4, 4);
    const Matrix a_inv = a.inverse();
    const Vector p = solve_quadratic_model(Vector::Zero(4), g, h, {}).x;
    const Vector g_t = a_inv.transpose() * g;
    const Matrix h_t = a_inv.transpose() * h * a_inv;
    const Matrix h_sym = 0.5 * (h_t + h_t.transpose());
    const Vector p_t = solve_quadratic_model(Vector::Zero(4), g_t, h_sym, {}).x;
    CHECK((p_t - a * p).norm() <= 1e-8);
  }
}

TEST_CASE("accuracy schedules") {
  CHECK(epsilon_schedule(Schedule::Geometric, 2, 0.4, 0.5) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(epsilon_schedule(Schedule::LogGlobal, 0, 0.3) == doctest::Approx(0.265).epsilon(1e-3));
  CHECK(epsilon_schedule(Schedule::LogGlobal, 0, 0.3) == doctest::Approx(1.0 / (1.0 + 2.0 * 1.3862943611198906)));
  CHECK(epsilon_schedule(Schedule::LogLocal, 0, 0.3) == doctest::Approx(0.1527).epsilon(1e-3));
  CHECK(epsilon_schedule(Schedule::Constant, 9, 0.3) == 0.3);
  CHECK(epsilon_schedule(Schedule::GeometricCompound, 3, 0.4, 0.5) == doctest::Approx(0.4 / 64.0));
  for (auto s : {Schedule::Constant, Schedule::Geometric, Schedule::LogGlobal, Schedule::LogLocal,
                 Schedule::GeometricCompound}) {
    CHECK(parse_schedule(to_string(s)) == s);
    for (long k = 0; k < 20; ++k)
      CHECK(epsilon_schedule(s, k + 1, 0.3, 0.7) <= epsilon_schedule(s, k, 0.3, 0.7));
  }
}

TEST_CASE("algorithm names") {
  CHECK(parse_algorithm("alg1") == Algorithm::SubsampledHessian);
  CHECK(parse_algorithm("alg6") == Algorithm::SharedSample);
  CHECK(parse_algorithm(to_string(Algorithm::RidgeRegularized)) == Algorithm::RidgeRegularized);
  CHECK_THROWS_AS(parse_algorithm("alg7"), Error);
}

TEST_CASE("configuration validation names the field") {
  AlgorithmConfig c;
  c.kappa = 2.0;
  c.epsilon = 1.2;
  try {
    c.validate();
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
    CHECK(std::string(e.what()).find("epsilon") != std::string::npos);
  }
  c.epsilon = 0.2;
  CHECK_NOTHROW(c.validate());
  c.schedule = Schedule::Geometric;  // schedules belong to the scheduled drivers
  CHECK_THROWS_AS(c.validate(), Error);
  c.schedule = Schedule::Constant;
  c.kappa.reset();  // bound-mode sizes need kappa
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("full-sample Newton solves a quadratic in one step") {
  const auto q = quadratic(6, 4, 7);
  const Vector x0 = Vector::Constant(4, 3.0);
  const auto trace = run_algorithm(full_newton(Algorithm::SubsampledHessian), q.oracle, {}, x0, q.x_star);
  REQUIRE(trace.size() >= 2);
  CHECK(*trace.records()[1].err <= 1e-10);
  CHECK(trace.termination == Termination::Tolerance);
  CHECK(trace.size() == 2);
  CHECK(trace.records()[0].sample_hess == 6);
}

TEST_CASE("ridge with zero lambda reproduces the plain driver") {
  SyntheticSpec spec;
  spec.kind = ObjectiveKind::Logistic;
  spec.n = 60;
  spec.p = 3;
  spec.seed = 4;
  const auto o = make_synthetic(spec).oracle;
  const Vector x0 = Vector::Constant(3, 0.1);
  auto a = full_newton(Algorithm::SubsampledHessian);
  auto b = full_newton(Algorithm::RidgeRegularized);
  b.lambda = 0.0;
  const auto ta = run_algorithm(a, o, {}, x0);
  const auto tb = run_algorithm(b, o, {}, x0);
  REQUIRE(ta.size() == tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta.records()[i].x == tb.records()[i].x);
}

TEST_CASE("sub-sampled Newton contracts on a quadratic") {
  const auto q = quadratic(50, 3, 13, 3.0);
  const auto c = regularity_constants_at(q.oracle, *q.x_star, ConeBasis::identity(3));
  AlgorithmConfig cfg;
  cfg.epsilon = 0.2;
  cfg.delta = 0.1;
  cfg.kappa = c.kappa;
  cfg.max_iterations = 1;
  long good = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    cfg.seed = seed;
    const Vector x0 = *q.x_star + oracle::random_vector(3, 1000 + seed, 0.01);
    const auto t = run_algorithm(cfg, q.oracle, {}, x0, q.x_star);
    if (*t.records()[1].err <= 0.25 * *t.records()[0].err) ++good;
  }
  CHECK(good >= 180);
}

TEST_CASE("iterates stay feasible") {
  SyntheticSpec spec;
  spec.kind = ObjectiveKind::Logistic;
  spec.n = 200;
  spec.p = 5;
  spec.seed = 2;
  const auto o = make_synthetic(spec).oracle;
  const auto ball = ConstraintSet::l1_ball(0.3);
  for (auto alg : {Algorithm::SubsampledHessian, Algorithm::RidgeRegularized, Algorithm::SharedSample}) {
    AlgorithmConfig cfg;
    cfg.algorithm = alg;
    cfg.hessian_sampling = SampleSizeMode::fixed_size(40);
    cfg.lambda = 0.05;
    if (alg == Algorithm::SharedSample) {
      cfg.gradient_sampling = SampleSizeMode::fixed_size(100);
      cfg.schedule = Schedule::Geometric;
    }
    cfg.max_iterations = 8;
    cfg.seed = 5;
    const auto t = run_algorithm(cfg, o, ball, Vector::Zero(5));
    for (const auto& r : t.records()) CHECK(r.x.lpNorm<1>() <= 0.3 + 1e-12);
  }
}

TEST_CASE("runs are deterministic and seeds matter") {
  SyntheticSpec spec;
  spec.kind = ObjectiveKind::Poisson;
  spec.n = 150;
  spec.p = 4;
  spec.seed = 3;
  const auto o = make_synthetic(spec).oracle;
  AlgorithmConfig cfg;
  cfg.algorithm = Algorithm::IndependentGradient;
  cfg.hessian_sampling = SampleSizeMode::fixed_size(30);
  cfg.gradient_sampling = SampleSizeMode::fixed_size(60);
  cfg.max_iterations = 5;
  cfg.seed = 77;
  const auto a = run_algorithm(cfg, o, {}, Vector::Zero(4));
  const auto b = run_algorithm(cfg, o, {}, Vector::Zero(4));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.records()[i].x == b.records()[i].x);
  cfg.seed = 78;
  const auto c = run_algorithm(cfg, o, {}, Vector::Zero(4));
  CHECK(c.records()[1].x != a.records()[1].x);
}

TEST_CASE("scheduled sample sizes never shrink") {
  SyntheticSpec spec;
  spec.kind = ObjectiveKind::Logistic;
  spec.n = 300;
  spec.p = 4;
  spec.seed = 8;
  const auto o = make_synthetic(spec).oracle;
  for (auto schedule : {Schedule::Geometric, Schedule::LogGlobal, Schedule::LogLocal}) {
    AlgorithmConfig cfg;
    cfg.algorithm = Algorithm::ScheduledHessian;
    cfg.schedule = schedule;
    cfg.epsilon = 0.4;
    cfg.rho = 0.8;
    cfg.kappa = 2.0;
    cfg.tolerance = 0.0;
    cfg.max_iterations = 8;
    const auto t = run_algorithm(cfg, o, {}, Vector::Zero(4));
    for (std::size_t i = 1; i + 1 < t.size(); ++i)
      CHECK(t.records()[i].sample_hess >= t.records()[i - 1].sample_hess);
  }
}

TEST_CASE("shared-sample driver uses one draw for both estimates") {
  SyntheticSpec spec;
  spec.kind = ObjectiveKind::Logistic;
  spec.n = 100;
  spec.p = 3;
  const auto o = make_synthetic(spec).oracle;
  AlgorithmConfig cfg;
  cfg.algorithm = Algorithm::SharedSample;
  cfg.kappa = 3.0;
  cfg.epsilon = 0.3;
  cfg.max_iterations = 3;
  const auto t = run_algorithm(cfg, o, {}, Vector::Zero(3));
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    CHECK(t.records()[i].sample_hess == t.records()[i].sample_grad);
  }
}

TEST_CASE("driver errors") {
  const auto q = quadratic(5, 3, 1);
  AlgorithmConfig cfg = full_newton(Algorithm::SubsampledHessian);
  try {
    run_algorithm(cfg, q.oracle, ConstraintSet::l1_ball(1.0), Vector::Constant(3, 1.0));
    FAIL("expected an input error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
  }

  // single-sample Hessians of a rank-one least-squares problem are singular
  Dataset d;
  d.features = Matrix::Identity(3, 3);
  d.labels = Vector::Ones(3);
  const auto ols = ComponentOracle::glm(ObjectiveKind::Ols, d);
  cfg.hessian_sampling = SampleSizeMode::fixed_size(1);
  try {
    run_algorithm(cfg, ols, {}, Vector::Zero(3));
    FAIL("expected a curvature error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Curvature);
    CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
  }
}

TEST_CASE("trace records are append-only with increasing k") {
  IterationTrace t;
  IterationRecord r;
  r.k = 0;
  r.x = Vector::Zero(1);
  t.append(r);
  CHECK_THROWS_AS(t.append(r), Error);
  r.k = 1;
  r.x = Vector::Ones(1);
  t.append(r);
  const auto e = t.errors(Vector::Zero(1));
  CHECK(e == std::vector<double>{0.0, 1.0});
}
