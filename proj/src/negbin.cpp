#include "arealepi/negbin.hpp"

#include <cmath>
#include <string>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "arealepi/error.hpp"

namespace arealepi {
namespace {

// Counts below this use the explicit product form of Gamma(y + 1/psi) / Gamma(1/psi).
constexpr std::int64_t kDirectSumLimit = 256;
constexpr std::int64_t kDirectSumLimitSmallPsi = 20000;

bool use_direct_sum(double y, double psi) {
  return y < kDirectSumLimit || (psi < 1e-4 && y < kDirectSumLimitSmallPsi);
}

void check_args(double y, double mu, double psi) {
  if (!std::isfinite(y) || !std::isfinite(mu) || !std::isfinite(psi)) {
    throw Error(ErrorKind::NonFiniteInput, "y=" + std::to_string(y) + " mu=" + std::to_string(mu) +
                                               " psi=" + std::to_string(psi));
  }
  if (y < 0 || !(mu > 0.0) || psi < 0.0) {
    throw Error(ErrorKind::InvalidInput, "need y >= 0, mu > 0, psi >= 0 (y=" + std::to_string(y) +
                                             " mu=" + std::to_string(mu) + " psi=" + std::to_string(psi) + ")");
  }
}

// h(x) / x with h(x) = log(1+x) - x/(1+x).
double h_over_x(double x) {
  if (x < 1e-3) {
    return x * (1.0 / 2 + x * (-2.0 / 3 + x * (3.0 / 4 + x * (-4.0 / 5 + x * (5.0 / 6 + x * (-6.0 / 7))))));
  }
  return (std::log1p(x) - x / (1.0 + x)) / x;
}

// g(x) / x with g(x) = x^2/(1+x)^2 - 2 h(x).
double g_over_x(double x) {
  if (x < 1e-3) {
    return x * x * (-2.0 / 3 + x * (3.0 / 2 + x * (-12.0 / 5 + x * (10.0 / 3 + x * (-30.0 / 7)))));
  }
  const double r = x / (1.0 + x);
  return (r * r - 2.0 * (std::log1p(x) - r)) / x;
}

}  // namespace

double poisson_loglik(std::int64_t y, double mu) {
  const double yd = static_cast<double>(y);
  check_args(yd, mu, 0.0);
  const double ylogmu = y == 0 ? 0.0 : yd * std::log(mu);
  return ylogmu - mu - std::lgamma(yd + 1.0);
}

double nb_loglik(std::int64_t y, double mu, double psi) {
  const double yd = static_cast<double>(y);
  check_args(yd, mu, psi);
  if (psi == 0.0) return poisson_loglik(y, mu);
  const double x = psi * mu;
  double ratio = 0.0;  // log Gamma(y + 1/psi) - log Gamma(1/psi) + y log psi
  if (use_direct_sum(yd, psi)) {
    for (std::int64_t j = 1; j < y; ++j) ratio += std::log1p(static_cast<double>(j) * psi);
  } else {
    const double k = 1.0 / psi;
    ratio = std::lgamma(yd + k) - std::lgamma(k) + yd * std::log(psi);
  }
  const double ylogmu = y == 0 ? 0.0 : yd * std::log(mu);
  return ratio + ylogmu - std::lgamma(yd + 1.0) - (yd + 1.0 / psi) * std::log1p(x);
}

NbKappaTerms nb_kappa_terms(double y, double mu, double psi) {
  const double x = psi * mu;
  // a1 = psi * sum_{j<y} j/(1+j psi), a2 = psi^2 * sum_{j<y} j^2/(1+j psi)^2
  double a1 = 0.0, a2 = 0.0;
  if (use_direct_sum(y, psi)) {
    const auto n = static_cast<std::int64_t>(y);
    for (std::int64_t j = 1; j < n; ++j) {
      const double jp = static_cast<double>(j) * psi;
      const double q = jp / (1.0 + jp);
      a1 += q;
      a2 += q * q;
    }
  } else {
    const double k = 1.0 / psi;
    const double dg = boost::math::digamma(k + y) - boost::math::digamma(k);
    const double tg = boost::math::trigamma(k) - boost::math::trigamma(k + y);
    a1 = y - k * dg;
    a2 = y - 2.0 * k * dg + k * k * tg;
  }
  const double opx = 1.0 + x;
  NbKappaTerms out;
  out.d_kappa = a1 - y * x / opx + mu * h_over_x(x);
  out.d2_kappa = -a2 + y * (x / opx) * (x / opx) + mu * g_over_x(x) + out.d_kappa;
  out.d_mu_kappa = -psi * (y - mu) / (opx * opx);
  return out;
}

std::int64_t nb_quantile(double p, double mu, double psi) {
  if (!std::isfinite(mu) || !std::isfinite(psi) || !std::isfinite(p)) {
    throw Error(ErrorKind::NonFiniteInput, "nb_quantile arguments must be finite");
  }
  if (mu < 0.0 || psi < 0.0) throw Error(ErrorKind::InvalidInput, "nb_quantile needs mu >= 0 and psi >= 0");
  if (p <= 0.0 || mu == 0.0) return 0;
  if (p >= 1.0) return kUnboundedCount;
  const double log_mu = std::log(mu);
  const double log1p_x = std::log1p(psi * mu);
  double logp = psi == 0.0 ? -mu : -log1p_x / psi;
  double cdf = 0.0;
  const double sd = std::sqrt(mu * (1.0 + psi * mu));
  const double far = mu + 60.0 * sd + 1000.0;
  for (std::int64_t y = 0;; ++y) {
    cdf += std::exp(logp);
    if (cdf >= p) return y;
    // Rounding can keep the running sum just below p deep in the tail.
    if (static_cast<double>(y) > far) return y;
    const double yd = static_cast<double>(y);
    logp += (psi == 0.0 ? 0.0 : std::log1p(psi * yd)) - std::log(yd + 1.0) + log_mu - (psi == 0.0 ? 0.0 : log1p_x);
  }
}

std::pair<std::int64_t, std::int64_t> nb_interval(double level, double mu, double psi) {
  if (!(level > 0.0 && level <= 1.0)) throw Error(ErrorKind::InvalidInput, "interval level must lie in (0, 1]");
  if (level == 1.0) return {0, kUnboundedCount};
  return {nb_quantile((1.0 - level) / 2.0, mu, psi), nb_quantile((1.0 + level) / 2.0, mu, psi)};
}

std::int64_t nb_sample(std::mt19937_64& rng, double mu, double psi) {
  if (!(mu > 0.0)) return 0;
  double rate = mu;
  if (psi > 0.0) {
    std::gamma_distribution<double> gamma(1.0 / psi, psi * mu);
    rate = gamma(rng);
    if (!(rate > 0.0)) return 0;
  }
  std::poisson_distribution<std::int64_t> poisson(rate);
  return poisson(rng);
}

}  // namespace arealepi
