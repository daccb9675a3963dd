#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "subnewton/error.hpp"
#include "subnewton/regularization.hpp"

using namespace subnewton;

TEST_CASE("spectral floor on a diagonal matrix") {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 0.5;
  h(1, 1) = 2.0;
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  expected(1, 1) = 2.0;
  CHECK((spectral_floor(h, 1.0) - expected).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("inactive floor leaves the matrix unchanged") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix m = oracle::random_symmetric(5, s);
    const Matrix h = m * m + 2.0 * Matrix::Identity(5, 5);
    CHECK((spectral_floor(h, 1.0) - h).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("spectral floor matches an independent clamp") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix h = oracle::random_symmetric(6, 100 + s);
    CHECK((spectral_floor(h, 0.7) - oracle::clamp_reconstruct(h, 0.7)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("spectral floor properties") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix h = oracle::random_symmetric(5, 200 + s);
    const Matrix h2 = oracle::random_symmetric(5, 300 + s);
    const double lambda = 0.3 + 0.05 * static_cast<double>(s);
    const Matrix once = spectral_floor(h, lambda);
    CHECK((spectral_floor(once, lambda) - once).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((once - spectral_floor(h2, lambda)).norm() <= (h - h2).norm() * (1.0 + 1e-12));
    CHECK(oracle::jacobi_eigenvalues(once).minCoeff() >= lambda * (1.0 - 1e-12));
  }
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = bad(1, 0) = std::nan("");
  CHECK_THROWS_AS(spectral_floor(bad, 1.0), Error);
}

TEST_CASE("ridge shift") {
  const Matrix h = oracle::random_symmetric(4, 5);
  CHECK(ridge_shift(h, 0.0) == h);
  CHECK(ridge_shift(Matrix::Zero(3, 3), 3.0) == 3.0 * Matrix::Identity(3, 3));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix m = oracle::random_symmetric(5, 400 + s);
    Vector values;
    Matrix vectors;
    oracle::jacobi_eigen(m, values, vectors);
    const Matrix shifted = ridge_shift(m, 1.7);
    CHECK((oracle::jacobi_eigenvalues(shifted) - (values.array() + 1.7).matrix()).cwiseAbs().maxCoeff() <= 1e-10);
    // eigenvectors of H stay eigenvectors
    for (int j = 0; j < 5; ++j) {
      const Vector v = vectors.col(j);
      CHECK((shifted * v - (values[j] + 1.7) * v).norm() <= 1e-10);
    }
  }
}

TEST_CASE("spectral thresholds") {
  const Matrix h0 = oracle::random_symmetric(3, 9) * oracle::random_symmetric(3, 9) +
                    0.5 * Matrix::Identity(3, 3);
  const double lmin = oracle::jacobi_eigenvalues(h0).minCoeff();
  CHECK(spectral_threshold(h0, 0.3, 0.3, 3, ThresholdRule::Global) == doctest::Approx(lmin).epsilon(1e-12));

  const Matrix two = 2.0 * Matrix::Identity(2, 2);
  CHECK(spectral_threshold(two, 0.1, 0.4, 2, ThresholdRule::Global) == doctest::Approx(3.0).epsilon(1e-15));

  const Matrix one = Matrix::Identity(1, 1);
  const double local = spectral_threshold(one, 0.2, 0.2, 1, ThresholdRule::Local);
  CHECK(local == doctest::Approx(1.125 * (1.0 + 1e-12)).epsilon(1e-15));
  CHECK(local > 1.125);
}

TEST_CASE("degenerate pilot") {
  Matrix h0 = Matrix::Identity(2, 2);
  h0(1, 1) = 0.0;
  try {
    spectral_threshold(h0, 0.2, 0.5, 2, ThresholdRule::Global);
    FAIL("expected a degenerate-pilot error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegeneratePilot);
  }
}
