#pragma once

#include <vector>

#include "subnewton/linalg.hpp"

// Pure calculators for the constants in the error recursions
//   ||D_{k+1}|| <= eta + rho0 ||D_k|| + xi ||D_k||^2,   D_k = x_k - x*,
// and the radii and accuracy limits under which they yield a given rate.
// `Global` uses the strong-convexity modulus gamma over the domain; `Local`
// uses gamma* = lambda_min(hess F(x*)) and assumes x_k is inside the local
// region where the Hessian stays above (1 - eps) gamma* / 2.

namespace subnewton {

enum class Regularity { Global, Local };

struct RecursionConstants {
  double eta = 0.0;
  double rho0 = 0.0;
  double xi = 0.0;
};

/// Hessian-only sub-sampling at accuracy eps.
RecursionConstants hessian_recursion_constants(double eps, double gamma, double lipschitz,
                                               Regularity regularity);

/// Largest eps for which rho0(eps) <= rho0: rho0/(1+rho0) or rho0/(2+rho0).
double hessian_epsilon_max(double rho0, Regularity regularity);

/// (rho - rho0) / xi; requires rho0 < rho. Infinite when xi = 0.
double linear_convergence_radius(double rho, double rho0, double xi);

/// (1 - eps) gamma* / (2 L): radius on which the local Hessian lower bound holds.
double local_model_radius(double eps, double gamma_star, double lipschitz);

/// Radius for the logarithmic schedules: 2 gamma / ((1 + 4 ln 2) L) or
/// 2 gamma / (3 (1 + 8 ln 2) L).
double slow_growth_radius(double gamma, double lipschitz, Regularity regularity);

/// Rate bound 1 / ln(3 + k) paired with the logarithmic schedules.
double slow_growth_rate(long k);

/// Spectral floor at lambda. Global: rho0 = (lambda - (1-eps)gamma + gamma eps)/lambda,
/// xi = L/(2 lambda), requires lambda >= (1-eps) gamma. Local: the same rho0 and
/// xi = (sqrt(p) + 1/2) L / lambda.
RecursionConstants spectral_recursion_constants(double eps, double gamma, double lambda,
                                                double lipschitz, Regularity regularity,
                                                Eigen::Index p);

/// Start radius for the spectral driver: gamma/(3L) or gamma*/(6 (sqrt(p) + 1/2) L).
double spectral_radius(double gamma, double lipschitz, Regularity regularity, Eigen::Index p);

/// Per-iteration linear rate 1 - gamma / (2 lambda) under the spectral floor.
double spectral_rate(double gamma, double lambda);

/// Largest pilot-free accuracy for the spectral driver (eps <= 1/6).
inline constexpr double kSpectralEpsilonMax = 1.0 / 6.0;

/// Ridge shift by lambda >= 0.
RecursionConstants ridge_recursion_constants(double eps, double gamma, double lambda,
                                             double lipschitz, Regularity regularity);

/// Largest eps with ridge rho0(eps) <= rho0. Global requires
/// 1 - gamma/(gamma + lambda) < rho0; domain error otherwise.
double ridge_epsilon_max(double rho0, double gamma, double lambda, Regularity regularity);

/// Independent gradient sampling at accuracies (eps1, eps2).
RecursionConstants independent_gradient_constants(double eps1, double eps2, double gamma,
                                                  double lipschitz, Regularity regularity);

/// Shared sample at accuracy eps (local only):
/// eta = 2 eps / ((1-eps) gamma*), rho0 = 0, xi = L / ((1-eps) gamma*).
RecursionConstants shared_sample_constants(double eps, double gamma_star, double lipschitz);

/// R-linear envelope ||D_k|| <= rho^k sigma for independent gradient sampling.
struct EnvelopeParameters {
  double sigma = 0.0;
  double eps1_max = 0.0;  // Hessian accuracy limit from rho0
  double eps2_max = 0.0;  // gradient accuracy limit
};
EnvelopeParameters independent_gradient_envelope(double rho, double rho0, double rho1,
                                                 double eps1, double gamma, double lipschitz,
                                                 Regularity regularity);

/// Shared-sample envelope radius sigma = (rho - rho0)(1 - eps) gamma* / (2L).
double shared_sample_sigma(double rho, double rho0, double eps, double gamma_star,
                           double lipschitz);
/// eps / (1-eps)^2 <= rho0 (rho - rho0) gamma*^2 / (4L).
bool shared_sample_epsilon_admissible(double eps, double rho, double rho0, double gamma_star,
                                      double lipschitz);

/// tau_0..tau_kmax with tau_0 = 1, tau_1 = rho, tau_k / tau_{k-1} = rho^{k-1}.
std::vector<double> superlinear_envelope(double rho, long k_max);

/// Quadratic phase for a regularized driver at contraction factor beta > 1:
/// while ||D_k|| >= region_threshold, ||D_{k+1}|| <= xi0 ||D_k||^2 provided
/// lambda >= lambda_required.
struct QuadraticPhase {
  double region_threshold = 0.0;
  double lambda_required = 0.0;
};
QuadraticPhase spectral_quadratic_phase(double lipschitz, double gamma, double eps, double xi0,
                                        double beta);
QuadraticPhase ridge_quadratic_phase(double lipschitz, double gamma, double eps, double xi0,
                                     double beta);

}  // namespace subnewton
