#include "subnewton/theory.hpp"

#include <cmath>
#include <limits>

#include "subnewton/error.hpp"

namespace subnewton {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_unit(double v, const char* name) {
  require(std::isfinite(v) && v > 0.0 && v < 1.0, ErrorKind::Domain,
          std::string(name) + " must lie in (0, 1)");
}
void check_positive(double v, const char* name) {
  require(std::isfinite(v) && v > 0.0, ErrorKind::Domain, std::string(name) + " must be positive");
}
void check_nonnegative(double v, const char* name) {
  require(std::isfinite(v) && v >= 0.0, ErrorKind::Domain,
          std::string(name) + " must be nonnegative");
}

}  // namespace

RecursionConstants hessian_recursion_constants(double eps, double gamma, double lipschitz,
                                               Regularity regularity) {
  check_unit(eps, "epsilon");
  check_positive(gamma, "gamma");
  check_nonnegative(lipschitz, "L");
  if (regularity == Regularity::Global)
    return {0.0, eps / (1.0 - eps), lipschitz / (2.0 * (1.0 - eps) * gamma)};
  return {0.0, 2.0 * eps / (1.0 - eps), 3.0 * lipschitz / ((1.0 - eps) * gamma)};
}

double hessian_epsilon_max(double rho0, Regularity regularity) {
  check_positive(rho0, "rho0");
  return regularity == Regularity::Global ? rho0 / (1.0 + rho0) : rho0 / (2.0 + rho0);
}

double linear_convergence_radius(double rho, double rho0, double xi) {
  require(rho0 < rho, ErrorKind::Domain, "linear radius requires rho0 < rho");
  check_nonnegative(xi, "xi");
  if (xi == 0.0) return kInf;
  return (rho - rho0) / xi;
}

double local_model_radius(double eps, double gamma_star, double lipschitz) {
  check_unit(eps, "epsilon");
  check_positive(gamma_star, "gamma*");
  check_nonnegative(lipschitz, "L");
  if (lipschitz == 0.0) return kInf;
  return (1.0 - eps) * gamma_star / (2.0 * lipschitz);
}

double slow_growth_radius(double gamma, double lipschitz, Regularity regularity) {
  check_positive(gamma, "gamma");
  check_nonnegative(lipschitz, "L");
  if (lipschitz == 0.0) return kInf;
  const double ln2 = std::log(2.0);
  if (regularity == Regularity::Global) return 2.0 * gamma / ((1.0 + 4.0 * ln2) * lipschitz);
  return 2.0 * gamma / (3.0 * (1.0 + 8.0 * ln2) * lipschitz);
}

double slow_growth_rate(long k) {
  require(k >= 0, ErrorKind::Domain, "iteration index must be nonnegative");
  return 1.0 / std::log(3.0 + static_cast<double>(k));
}

RecursionConstants spectral_recursion_constants(double eps, double gamma, double lambda,
                                                double lipschitz, Regularity regularity,
                                                Eigen::Index p) {
  check_unit(eps, "epsilon");
  check_positive(gamma, "gamma");
  check_positive(lambda, "lambda");
  check_nonnegative(lipschitz, "L");
  require(lambda >= (1.0 - eps) * gamma, ErrorKind::Domain,
          "spectral recursion requires lambda >= (1 - epsilon) gamma");
  const double rho0 = (lambda - (1.0 - eps) * gamma + gamma * eps) / lambda;
  if (regularity == Regularity::Global) return {0.0, rho0, lipschitz / (2.0 * lambda)};
  require(p >= 1, ErrorKind::Domain, "dimension must be positive");
  return {0.0, rho0, (std::sqrt(static_cast<double>(p)) + 0.5) * lipschitz / lambda};
}

double spectral_radius(double gamma, double lipschitz, Regularity regularity, Eigen::Index p) {
  check_positive(gamma, "gamma");
  check_nonnegative(lipschitz, "L");
  if (lipschitz == 0.0) return kInf;
  if (regularity == Regularity::Global) return gamma / (3.0 * lipschitz);
  return gamma / (6.0 * (std::sqrt(static_cast<double>(p)) + 0.5) * lipschitz);
}

double spectral_rate(double gamma, double lambda) {
  check_positive(gamma, "gamma");
  check_positive(lambda, "lambda");
  return 1.0 - gamma / (2.0 * lambda);
}

RecursionConstants ridge_recursion_constants(double eps, double gamma, double lambda,
                                             double lipschitz, Regularity regularity) {
  check_unit(eps, "epsilon");
  check_positive(gamma, "gamma");
  check_nonnegative(lambda, "lambda");
  check_nonnegative(lipschitz, "L");
  if (regularity == Regularity::Global) {
    const double denom = (1.0 - eps) * gamma + lambda;
    return {0.0, (lambda + gamma * eps) / denom, lipschitz / (2.0 * denom)};
  }
  const double denom = (1.0 - eps) * gamma + 2.0 * lambda;
  return {0.0, (2.0 * lambda + 2.0 * gamma * eps) / denom, 3.0 * lipschitz / denom};
}

double ridge_epsilon_max(double rho0, double gamma, double lambda, Regularity regularity) {
  check_unit(rho0, "rho0");
  check_positive(gamma, "gamma");
  check_nonnegative(lambda, "lambda");
  if (regularity == Regularity::Global) {
    require(1.0 - gamma / (gamma + lambda) < rho0, ErrorKind::Domain,
            "ridge rate requires rho0 > lambda / (gamma + lambda)");
    return (rho0 * gamma + (rho0 - 1.0) * lambda) / ((1.0 + rho0) * gamma);
  }
  require(1.0 - gamma / (gamma + 2.0 * lambda) < rho0, ErrorKind::Domain,
          "ridge rate requires rho0 > 2 lambda / (gamma* + 2 lambda)");
  return (rho0 * gamma + 2.0 * (rho0 - 1.0) * lambda) / ((2.0 + rho0) * gamma);
}

RecursionConstants independent_gradient_constants(double eps1, double eps2, double gamma,
                                                  double lipschitz, Regularity regularity) {
  check_unit(eps1, "epsilon1");
  check_positive(eps2, "epsilon2");
  check_positive(gamma, "gamma");
  check_nonnegative(lipschitz, "L");
  const double scale = (1.0 - eps1) * gamma;
  if (regularity == Regularity::Global)
    return {eps2 / scale, eps1 / (1.0 - eps1), lipschitz / (2.0 * scale)};
  return {2.0 * eps2 / scale, 2.0 * eps1 / (1.0 - eps1), 3.0 * lipschitz / scale};
}

RecursionConstants shared_sample_constants(double eps, double gamma_star, double lipschitz) {
  check_unit(eps, "epsilon");
  check_positive(gamma_star, "gamma*");
  check_nonnegative(lipschitz, "L");
  const double scale = (1.0 - eps) * gamma_star;
  return {2.0 * eps / scale, 0.0, lipschitz / scale};
}

EnvelopeParameters independent_gradient_envelope(double rho, double rho0, double rho1,
                                                 double eps1, double gamma, double lipschitz,
                                                 Regularity regularity) {
  check_unit(rho, "rho");
  check_unit(rho0, "rho0");
  check_unit(rho1, "rho1");
  check_unit(eps1, "epsilon1");
  check_positive(gamma, "gamma");
  check_positive(lipschitz, "L");
  require(rho0 + rho1 < rho, ErrorKind::Domain, "envelope requires rho0 + rho1 < rho");
  const double gap = rho - (rho0 + rho1);
  EnvelopeParameters out;
  if (regularity == Regularity::Global) {
    out.sigma = 2.0 * gap * (1.0 - eps1) * gamma / lipschitz;
    out.eps1_max = rho0 / (1.0 + rho0);
    out.eps2_max = (1.0 - eps1) * gamma * rho1 * out.sigma;
  } else {
    out.sigma = gap * (1.0 - eps1) * gamma / (3.0 * lipschitz);
    out.eps1_max = rho0 / (2.0 + rho0);
    out.eps2_max = (1.0 - eps1) * gamma * rho1 * out.sigma / 2.0;
  }
  return out;
}

double shared_sample_sigma(double rho, double rho0, double eps, double gamma_star,
                           double lipschitz) {
  check_unit(rho, "rho");
  check_unit(rho0, "rho0");
  check_unit(eps, "epsilon");
  check_positive(gamma_star, "gamma*");
  check_positive(lipschitz, "L");
  require(rho0 < rho, ErrorKind::Domain, "envelope requires rho0 < rho");
  return (rho - rho0) * (1.0 - eps) * gamma_star / (2.0 * lipschitz);
}

bool shared_sample_epsilon_admissible(double eps, double rho, double rho0, double gamma_star,
                                      double lipschitz) {
  check_unit(eps, "epsilon");
  check_unit(rho, "rho");
  check_unit(rho0, "rho0");
  check_positive(gamma_star, "gamma*");
  check_positive(lipschitz, "L");
  const double lhs = eps / ((1.0 - eps) * (1.0 - eps));
  return lhs <= rho0 * (rho - rho0) * gamma_star * gamma_star / (4.0 * lipschitz);
}

std::vector<double> superlinear_envelope(double rho, long k_max) {
  check_unit(rho, "rho");
  require(k_max >= 0, ErrorKind::Domain, "k_max must be nonnegative");
  std::vector<double> tau(static_cast<std::size_t>(k_max) + 1);
  tau[0] = 1.0;
  for (long k = 1; k <= k_max; ++k) {
    const double factor = k == 1 ? rho : std::pow(rho, static_cast<double>(k - 1));
    tau[static_cast<std::size_t>(k)] = tau[static_cast<std::size_t>(k - 1)] * factor;
  }
  return tau;
}

namespace {

double quadratic_region(double lipschitz, double gamma, double eps, double xi0, double beta) {
  return (beta * lipschitz - 2.0 * gamma * xi0 + 4.0 * gamma * xi0 * eps) /
         ((beta - 1.0) * lipschitz * xi0);
}

void check_phase_inputs(double lipschitz, double gamma, double eps, double xi0, double beta) {
  require(std::isfinite(lipschitz) && lipschitz > 0.0, ErrorKind::Domain,
          "quadratic phase needs L > 0");
  check_positive(gamma, "gamma");
  check_unit(eps, "epsilon");
  check_unit(xi0, "xi0");
  require(std::isfinite(beta) && beta > 1.0, ErrorKind::Domain, "beta must exceed 1");
}

}  // namespace

QuadraticPhase spectral_quadratic_phase(double lipschitz, double gamma, double eps, double xi0,
                                        double beta) {
  check_phase_inputs(lipschitz, gamma, eps, xi0, beta);
  return {quadratic_region(lipschitz, gamma, eps, xi0, beta), beta * lipschitz / (2.0 * xi0)};
}

QuadraticPhase ridge_quadratic_phase(double lipschitz, double gamma, double eps, double xi0,
                                     double beta) {
  check_phase_inputs(lipschitz, gamma, eps, xi0, beta);
  return {quadratic_region(lipschitz, gamma, eps, xi0, beta),
          (beta * lipschitz - (1.0 - eps) * 2.0 * gamma * xi0) / (2.0 * xi0)};
}

}  // namespace subnewton
