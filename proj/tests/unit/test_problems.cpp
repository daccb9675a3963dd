#include <doctest.h>

#include <cmath>
#include <sstream>

#include "../support/oracles.hpp"
#include "subnewton/error.hpp"
#include "subnewton/harness.hpp"
#include "subnewton/problems.hpp"

using namespace subnewton;

namespace {

Dataset one_row(std::initializer_list<double> a, double b) {
  Dataset d;
  d.features = Matrix(1, static_cast<Eigen::Index>(a.size()));
  Eigen::Index j = 0;
  for (double v : a) d.features(0, j++) = v;
  d.labels = Vector::Constant(1, b);
  return d;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) out[j++] = x;
  return out;
}

ComponentOracle synthetic(ObjectiveKind kind, std::size_t n, Eigen::Index p, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.kind = kind;
  spec.n = n;
  spec.p = p;
  spec.seed = seed;
  spec.conditioning = 5.0;
  return make_synthetic(spec).oracle;
}

constexpr ObjectiveKind kAllKinds[] = {ObjectiveKind::Ols, ObjectiveKind::Logistic,
                                       ObjectiveKind::Poisson, ObjectiveKind::SvmQuadHinge,
                                       ObjectiveKind::SyntheticQuadratic};

}  // namespace

TEST_CASE("objective kind names round-trip") {
  for (auto k : kAllKinds) CHECK(parse_objective_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_objective_kind("probit"), Error);
}

TEST_CASE("OLS component gradient") {
  const auto o = ComponentOracle::glm(ObjectiveKind::Ols, one_row({1.0, 0.0}, 1.0));
  const Vector g = o.component_gradient(0, vec({2.0, 0.0}));
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 0.0);
  CHECK(o.component_value(0, vec({2.0, 0.0})) == doctest::Approx(2.0 - 2.0));
}

TEST_CASE("logistic gradient factor at a zero predictor") {
  for (double b : {0.0, 1.0}) {
    const auto o = ComponentOracle::glm(ObjectiveKind::Logistic, one_row({0.3, -1.2, 2.0}, b));
    const Vector g = o.component_gradient(0, Vector::Zero(3));
    const Vector a = vec({0.3, -1.2, 2.0});
    CHECK((g - (0.5 - b) * a).norm() < 1e-16);
  }
}

TEST_CASE("logistic components match a direct formula") {
  const auto o = synthetic(ObjectiveKind::Logistic, 30, 4, 3);
  const Vector x = oracle::random_vector(4, 8, 0.5);
  for (std::size_t i = 0; i < 30; ++i) {
    const Vector a = o.data().features.row(static_cast<Eigen::Index>(i)).transpose();
    const double b = o.data().labels[static_cast<Eigen::Index>(i)];
    CHECK(o.component_value(i, x) == doctest::Approx(oracle::logistic_value(a, b, x)).epsilon(1e-12));
    CHECK((o.component_gradient(i, x) - oracle::logistic_gradient(a, b, x)).norm() < 1e-12);
  }
}

TEST_CASE("SVM with the hinge inactive reduces to the ridge term") {
  // b a^T x = 2
  const auto o = ComponentOracle::svm(one_row({1.0, 0.0}, 1.0), 3.0);
  const Vector x = vec({2.0, 0.5});
  CHECK((o.component_gradient(0, x) - x).norm() == 0.0);
  CHECK((o.component_hessian(0, x) - Matrix::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("SVM with the hinge active") {
  const double c = 0.7;
  const auto o = ComponentOracle::svm(one_row({1.0, 2.0}, -1.0), c);
  const Vector x = vec({0.1, 0.2});  // b a^T x = -0.5 < 1
  const Vector a = vec({1.0, 2.0});
  const Vector expected = 2.0 * c * (a.dot(x) - (-1.0)) * a + x;
  CHECK((o.component_gradient(0, x) - expected).norm() < 1e-14);
  const Matrix h = 2.0 * c * a * a.transpose() + Matrix::Identity(2, 2);
  CHECK((o.component_hessian(0, x) - h).norm() < 1e-14);
}

TEST_CASE("component index and Poisson overflow errors") {
  const auto o = ComponentOracle::glm(ObjectiveKind::Poisson, one_row({1.0}, 2.0));
  try {
    o.component_gradient(1, vec({0.0}));
    FAIL("expected an input error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
  }
  try {
    o.component_value(0, vec({701.0}));
    FAIL("expected an overflow error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Overflow);
  }
  CHECK_NOTHROW(o.component_value(0, vec({699.0})));
}

TEST_CASE("label domains are validated") {
  CHECK_THROWS_AS(ComponentOracle::glm(ObjectiveKind::Logistic, one_row({1.0}, 0.5)), Error);
  CHECK_THROWS_AS(ComponentOracle::glm(ObjectiveKind::Poisson, one_row({1.0}, -1.0)), Error);
  CHECK_THROWS_AS(ComponentOracle::glm(ObjectiveKind::Poisson, one_row({1.0}, 1.5)), Error);
  CHECK_THROWS_AS(ComponentOracle::svm(one_row({1.0}, 0.0), 1.0), Error);
  CHECK_THROWS_AS(ComponentOracle::svm(one_row({1.0}, 1.0), 0.0), Error);
  CHECK_NOTHROW(ComponentOracle::glm(ObjectiveKind::Ols, one_row({1.0}, -3.7)));
}

TEST_CASE("full evaluations average the components") {
  std::vector<Matrix> a(3, Matrix::Identity(2, 2));
  std::vector<Vector> c(3, Vector::Zero(2));
  const auto q = ComponentOracle::quadratic(a, c);
  CHECK((q.full_hessian(vec({4.0, -1.0})) - Matrix::Identity(2, 2)).norm() == 0.0);

  Dataset d;
  d.features = Matrix::Identity(2, 2);
  d.labels = vec({-1.0, -1.0});
  const auto ols = ComponentOracle::glm(ObjectiveKind::Ols, d);
  // gradients (a_i^T x - b_i) a_i at x = 0 are (1,0) and (0,1)
  const Vector g = ols.full_gradient(Vector::Zero(2));
  CHECK(g[0] == 0.5);
  CHECK(g[1] == 0.5);
}

TEST_CASE("full gradient equals the mean of component gradients") {
  for (auto kind : kAllKinds) {
    const auto o = synthetic(kind, 40, 3, 17);
    const Vector x = oracle::random_vector(3, 4, 0.3);
    Vector sum = Vector::Zero(3);
    for (std::size_t i = 0; i < o.n(); ++i) sum += o.component_gradient(i, x);
    CHECK((sum / 40.0 - o.full_gradient(x)).norm() <= 1e-12 * (1.0 + sum.norm()));
  }
}

TEST_CASE("derivatives agree with finite differences") {
  for (auto kind : kAllKinds) {
    const auto o = synthetic(kind, 50, 4, 21);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Vector x = random_test_point(o, s, 0.5);
      CAPTURE(to_string(kind));
      CHECK(finite_difference_check(o, x, DerivativeOrder::Gradient) <= 1e-6);
      CHECK(finite_difference_check(o, x, DerivativeOrder::Hessian) <= 1e-4);
    }
  }
}

TEST_CASE("component Hessians are symmetric and have the right curvature") {
  for (auto kind : kAllKinds) {
    const auto o = synthetic(kind, 25, 3, 2);
    const Vector x = random_test_point(o, 5, 0.7);
    for (std::size_t i = 0; i < o.n(); ++i) {
      const Matrix h = o.component_hessian(i, x);
      CHECK((h - h.transpose()).norm() == 0.0);
      const double lo = oracle::jacobi_eigenvalues(h).minCoeff();
      if (kind == ObjectiveKind::SvmQuadHinge) {
        CHECK(lo >= 1.0 - 1e-12);
      } else {
        CHECK(lo >= -1e-12);
      }
    }
  }
}

TEST_CASE("OLS and quadratic Hessians do not depend on x") {
  for (auto kind : {ObjectiveKind::Ols, ObjectiveKind::SyntheticQuadratic}) {
    const auto o = synthetic(kind, 20, 3, 6);
    CHECK((o.full_hessian(vec({1.0, 2.0, 3.0})) - o.full_hessian(vec({-4.0, 0.0, 9.0}))).norm() == 0.0);
    CHECK(o.hessian_lipschitz().value() == 0.0);
  }
}

TEST_CASE("uniform gradient bounds") {
  const auto ols = ComponentOracle::glm(ObjectiveKind::Ols, one_row({1.0, 0.0}, 0.0));
  CHECK(gradient_bound(ols, std::nullopt) == doctest::Approx(1.0));
  const auto zero = ComponentOracle::glm(ObjectiveKind::Logistic, one_row({0.0, 0.0}, 0.0));
  CHECK(gradient_bound(zero, std::nullopt) == 0.0);

  // the bound dominates every component gradient over the unit l1-ball
  for (auto kind : {ObjectiveKind::Ols, ObjectiveKind::Logistic, ObjectiveKind::Poisson}) {
    const auto o = synthetic(kind, 30, 4, 12);
    const double g = gradient_bound(o, std::nullopt);
    oracle::Lcg rng(kind == ObjectiveKind::Ols ? 1 : 2);
    for (int t = 0; t < 200; ++t) {
      Vector x(4);
      for (int j = 0; j < 4; ++j) x[j] = rng.normal();
      x /= x.lpNorm<1>() * (1.0 + rng.uniform());
      CHECK(exact_gradient_bound(o, x) <= g * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("SVM pointwise bound") {
  const double c = 2.0;
  Dataset d;
  d.features = Matrix(2, 2);
  d.features << 1.0, 1.0, 0.0, 3.0;
  d.labels = vec({1.0, -1.0});
  const auto o = ComponentOracle::svm(d, c);
  const double at_zero = gradient_bound(o, Vector::Zero(2));
  CHECK(at_zero == doctest::Approx(2.0 * c * 3.0));
  const Vector x = vec({0.3, -0.4});
  CHECK(exact_gradient_bound(o, x) <= gradient_bound(o, x));
  try {
    gradient_bound(o, std::nullopt);
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
  }
  const auto ols = ComponentOracle::glm(ObjectiveKind::Ols, one_row({1.0}, 0.0));
  CHECK_THROWS_AS(gradient_bound(ols, vec({0.0})), Error);
}

TEST_CASE("synthetic quadratic minimizers") {
  const auto single = ComponentOracle::quadratic({Matrix::Identity(2, 2)}, {vec({1.0, 1.0})});
  const Vector x1 = quadratic_minimizer(single);
  CHECK((x1 - vec({1.0, 1.0})).norm() < 1e-15);

  SyntheticSpec spec;
  spec.kind = ObjectiveKind::SyntheticQuadratic;
  spec.n = 4;
  spec.p = 3;
  spec.seed = 7;
  const auto problem = make_synthetic(spec);
  REQUIRE(problem.x_star.has_value());
  CHECK(problem.oracle.full_gradient(*problem.x_star).norm() <= 1e-12);
}

TEST_CASE("synthetic problems are deterministic") {
  for (auto kind : kAllKinds) {
    const auto a = synthetic(kind, 15, 3, 99);
    const auto b = synthetic(kind, 15, 3, 99);
    const Vector x = Vector::Constant(3, 0.1);
    CHECK((a.full_hessian(x) - b.full_hessian(x)).norm() == 0.0);
    CHECK(a.full_value(x) == b.full_value(x));
    if (kind != ObjectiveKind::SyntheticQuadratic) {
      CHECK((a.data().features - b.data().features).norm() == 0.0);
      CHECK((a.data().labels - b.data().labels).norm() == 0.0);
    }
  }
}

TEST_CASE("Hessian Lipschitz metadata") {
  const auto logistic = synthetic(ObjectiveKind::Logistic, 20, 3, 1);
  const double analytic = logistic.hessian_lipschitz().value();
  CHECK(analytic > 0.0);
  // an estimate from random pairs cannot exceed a valid bound
  CHECK(estimate_hessian_lipschitz(logistic, Vector::Zero(3), 1.0, 200, 4) <= analytic);
  auto poisson = synthetic(ObjectiveKind::Poisson, 20, 3, 1);
  CHECK_FALSE(poisson.hessian_lipschitz().has_value());
  poisson.set_hessian_lipschitz(2.5);
  CHECK(poisson.hessian_lipschitz().value() == 2.5);
}

TEST_CASE("CSV round trip is exact") {
  for (auto kind : {ObjectiveKind::Ols, ObjectiveKind::Logistic, ObjectiveKind::Poisson,
                    ObjectiveKind::SvmQuadHinge}) {
    const auto o = synthetic(kind, 12, 3, 5);
    std::stringstream buffer;
    write_dataset_csv(buffer, o.data());
    const Dataset back = read_dataset_csv(buffer, kind);
    CHECK((back.features - o.data().features).norm() == 0.0);
    CHECK((back.labels - o.data().labels).norm() == 0.0);
  }
  std::stringstream bad("b,a1\n0.5,1.0\n");
  CHECK_THROWS_AS(read_dataset_csv(bad, ObjectiveKind::Logistic), Error);
  std::stringstream header("x,a1\n1,2\n");
  CHECK_THROWS_AS(read_dataset_csv(header, ObjectiveKind::Ols), Error);
}

TEST_CASE("Poisson gradient at a zero predictor") {
  const auto o = synthetic(ObjectiveKind::Poisson, 20, 3, 8);
  Vector expected = Vector::Zero(3);
  for (Eigen::Index i = 0; i < 20; ++i)
    expected += (1.0 - o.data().labels[i]) * o.data().features.row(i).transpose();
  expected /= 20.0;
  CHECK((o.full_gradient(Vector::Zero(3)) - expected).norm() < 1e-13);
}
