#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <utility>

namespace arealepi {

// Negative binomial with mean mu and overdispersion psi, Var = mu (1 + psi mu).
// psi = 0 is the Poisson distribution.

/// Log probability mass. The psi = 0 branch is the Poisson log density
/// evaluated directly (no numerical limit). Throws NonFiniteInput for
/// non-finite arguments and InvalidInput for y < 0, mu <= 0 or psi < 0.
double nb_loglik(std::int64_t y, double mu, double psi);

double poisson_loglik(std::int64_t y, double mu);

/// Derivatives of nb_loglik with respect to kappa = log(psi) (psi > 0).
struct NbKappaTerms {
  double d_kappa = 0.0;     ///< d l / d kappa
  double d2_kappa = 0.0;    ///< d^2 l / d kappa^2
  double d_mu_kappa = 0.0;  ///< d^2 l / (d mu d kappa)
};

NbKappaTerms nb_kappa_terms(double y, double mu, double psi);

/// Smallest y with P(Y <= y) >= p, by forward summation of the exact pmf.
/// Returns 0 for p <= 0 and the int64 maximum for p >= 1.
std::int64_t nb_quantile(double p, double mu, double psi);

inline constexpr std::int64_t kUnboundedCount = std::numeric_limits<std::int64_t>::max();

/// Central interval [q_{(1-level)/2}, q_{(1+level)/2}]; level in (0, 1].
/// level = 1 yields [0, kUnboundedCount].
std::pair<std::int64_t, std::int64_t> nb_interval(double level, double mu, double psi);

/// Gamma-Poisson draw. mu = 0 returns 0.
std::int64_t nb_sample(std::mt19937_64& rng, double mu, double psi);

}  // namespace arealepi
