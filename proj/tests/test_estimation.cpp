#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "arealepi/estimation.hpp"
#include "arealepi/kernels.hpp"
#include "support.hpp"

using namespace arealepi;
using namespace testsupport;

namespace {

std::vector<Date> calendar(std::size_t T) {
  std::vector<Date> d{Date::parse("2020-02-24")};
  while (d.size() < T) d.push_back(d.back().next());
  return d;
}

struct Case {
  Instance in;
  ModelSpec spec;
  Params truth;
  CountPanel panel;
};

Case simulated(std::size_t rows, std::size_t cols, std::size_t T, std::uint64_t seed, Truth t = {}) {
  Case c{grid_instance(rows, cols, 100 + seed), {}, {}, {}};
  c.spec = full_spec(c.in);
  c.truth = truth_params(c.spec, c.in.cov, 200 + seed, t);
  c.panel = simulate_panel(c.truth, c.spec, c.in, T, 300 + seed);
  return c;
}

// Endemic-only random-intercept instance: mu[r,t] = e_r exp(alpha + b_r).
struct Intercepts {
  RegionSet regions;
  RegionCovariates cov;
  ModelSpec spec;
  CountPanel panel;
};

Intercepts intercept_instance(std::size_t R, std::size_t T, double sigma2, std::uint64_t seed, bool identical = false) {
  Intercepts x;
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < R; ++r) ids.push_back(region_id(r));
  x.regions = named_regions(ids);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  x.cov.pop_share.resize(static_cast<Eigen::Index>(R));
  for (auto& v : x.cov.pop_share) v = identical ? 1.0 : u(rng);
  x.cov.pop_share /= x.cov.pop_share.sum();
  x.cov.over65 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(R), 0.2);
  x.spec.lambda.enabled = false;
  x.spec.phi.enabled = false;
  x.spec.nu.t = x.spec.nu.t_squared = x.spec.nu.log_over65 = false;
  x.spec.overdispersion = Overdispersion::None;
  std::normal_distribution<double> z(0.0, std::sqrt(sigma2));
  CountMatrix y(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(T));
  Eigen::VectorXd b(static_cast<Eigen::Index>(R));
  for (auto& v : b) v = identical ? 0.0 : z(rng);
  for (std::size_t r = 0; r < R; ++r) {
    const double mu = x.cov.pop_share[static_cast<Eigen::Index>(r)] * std::exp(std::log(20.0 * R) + b[static_cast<Eigen::Index>(r)]);
    std::poisson_distribution<std::int64_t> pois(mu);
    for (std::size_t t = 0; t < T; ++t) y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = identical ? 20 : pois(rng);
  }
  x.panel = CountPanel(x.regions, calendar(T), y);
  return x;
}

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

Eigen::VectorXd all_values(const FitResult& f) {
  const ParamLayout layout(f.spec, f.region_ids.size());
  Eigen::VectorXd theta = layout.pack(f.params);
  Eigen::VectorXd out(theta.size() + f.se.values.size() + 6);
  out << theta, f.se.values, f.params.sigma2[0], f.params.sigma2[1], f.params.sigma2[2], f.loglik, f.penalized_loglik,
      f.marginal_loglik_approx;
  return out;
}

}  // namespace

TEST_CASE("penalized log-likelihood") {
  const Case c = simulated(2, 3, 12, 1);
  const double ll = panel_loglik(c.truth, c.spec, c.panel, c.in.cov).value;

  Params zero_b = c.truth;
  for (std::size_t k = 0; k < 3; ++k) zero_b.b(static_cast<Component>(k)).setZero();
  double expect = panel_loglik(zero_b, c.spec, c.panel, c.in.cov).value;
  for (double s2 : zero_b.sigma2) expect -= 0.5 * 6 * std::log(2 * std::numbers::pi * s2);
  CHECK(penalized_loglik(zero_b, c.spec, c.panel, c.in.cov) == doctest::Approx(expect).epsilon(1e-14));

  double hand = ll;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& b = c.truth.b(static_cast<Component>(k));
    const double s2 = c.truth.sigma2[k];
    hand -= 0.5 * (b.squaredNorm() / s2 + 6 * std::log(2 * std::numbers::pi * s2));
  }
  CHECK(penalized_loglik(c.truth, c.spec, c.panel, c.in.cov) == doctest::Approx(hand).epsilon(1e-14));

  const ModelSpec fixed = fixed_spec(c.in);
  Params pf = Params::zeros(6, fixed);
  pf.alpha_nu = 3.0;
  CHECK(penalized_loglik(pf, fixed, c.panel, c.in.cov) == panel_loglik(pf, fixed, c.panel, c.in.cov).value);

  Params bad = c.truth;
  bad.sigma2[1] = 0.0;
  CHECK(error_kind([&] { penalized_loglik(bad, c.spec, c.panel, c.in.cov); }) == ErrorKind::ZeroVariance);
}

TEST_CASE("options validation") {
  FitOptions o;
  CHECK_NOTHROW(o.validate());
  o.max_outer_iters = 0;
  CHECK(error_kind([&] { o.validate(); }) == ErrorKind::InvalidInput);
  o = {};
  o.tol_params = 0.0;
  CHECK(error_kind([&] { o.validate(); }) == ErrorKind::InvalidInput);
  o = {};
  o.sigma2_floor = -1.0;
  CHECK(error_kind([&] { o.validate(); }) == ErrorKind::InvalidInput);
  CHECK(init_from_string(to_string(Init::Zeros)) == Init::Zeros);
  CHECK(init_from_string(to_string(Init::EndemicGlmWarmstart)) == Init::EndemicGlmWarmstart);
}

TEST_CASE("single-region Poisson GLM against IRLS") {
  const std::size_t T = 40;
  std::mt19937_64 rng(9);
  CountMatrix y(1, T);
  for (std::size_t t = 1; t <= T; ++t) {
    std::poisson_distribution<std::int64_t> pois(std::exp(3.0 + 0.05 * t - 0.001 * t * t));
    y(0, static_cast<Eigen::Index>(t - 1)) = pois(rng);
  }
  const CountPanel panel(named_regions({"X"}), calendar(T), y);
  RegionCovariates cov;
  cov.pop_share = Eigen::VectorXd::Ones(1);
  cov.over65 = Eigen::VectorXd::Constant(1, 0.2);
  ModelSpec spec;
  spec.lambda.enabled = false;
  spec.phi.enabled = false;
  spec.nu.random_intercept = false;
  spec.nu.log_over65 = false;
  spec.overdispersion = Overdispersion::None;
  const FitResult f = fit(spec, panel, cov);
  REQUIRE(f.converged);

  // IRLS on days 2..T
  Eigen::MatrixXd X(T - 1, 3);
  Eigen::VectorXd yy(T - 1);
  for (std::size_t t = 2; t <= T; ++t) {
    X.row(static_cast<Eigen::Index>(t - 2)) << 1.0, double(t), double(t * t);
    yy[static_cast<Eigen::Index>(t - 2)] = static_cast<double>(y(0, static_cast<Eigen::Index>(t - 1)));
  }
  Eigen::VectorXd beta = Eigen::Vector3d(std::log(yy.mean()), 0, 0);
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd eta = X * beta;
    const Eigen::VectorXd mu = eta.array().exp();
    const Eigen::VectorXd z = eta.array() + (yy - mu).array() / mu.array();
    const Eigen::MatrixXd xtw = X.transpose() * mu.asDiagonal();
    const Eigen::VectorXd next = (xtw * X).ldlt().solve(xtw * z);
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (change < 1e-14) break;
  }
  CHECK(f.params.alpha_nu == doctest::Approx(beta[0]).epsilon(1e-6));
  CHECK(std::abs(f.params.beta_nu_t - beta[1]) < 1e-6);
  CHECK(std::abs(f.params.beta_nu_t2 - beta[2]) < 1e-6);
  CHECK(std::isfinite(f.aic_like));
  CHECK(f.aic_like == doctest::Approx(-2 * f.loglik + 6).epsilon(1e-14));
}

TEST_CASE("singular design") {
  const Case c = simulated(2, 3, 12, 2);
  RegionCovariates flat = c.in.cov;
  flat.over65.setConstant(0.2);
  ModelSpec spec = fixed_spec(c.in);
  CHECK(error_kind([&] { fit(spec, c.panel, flat); }) == ErrorKind::SingularInformation);
  CHECK(error_kind([&] { inner_maximize(Params::zeros(6, spec), spec, c.panel, flat, {}); }) ==
        ErrorKind::SingularInformation);
}

TEST_CASE("inner loop is monotone and stationary at its optimum") {
  const Case c = simulated(3, 4, 25, 3);
  Params start = Params::zeros(12, c.spec);
  start.alpha_lambda = std::log(0.5);
  start.alpha_phi = std::log(0.05);
  start.alpha_nu = std::log(static_cast<double>(c.panel.counts().sum()) / c.panel.counts().size());
  start.sigma2 = {0.5, 0.5, 1.0};
  start.psi.setConstant(0.5);
  FitOptions o;
  o.max_inner_iters = 200;
  const InnerResult r = inner_maximize(start, c.spec, c.panel, c.in.cov, o);
  REQUIRE(r.converged);
  REQUIRE(r.trace.size() >= 2);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i] >= r.trace[i - 1] - 1e-12 * (1.0 + std::abs(r.trace[i - 1])));
  }
  CHECK(r.penalized_loglik == doctest::Approx(penalized_loglik(r.params, c.spec, c.panel, c.in.cov)).epsilon(1e-14));
  CHECK(r.gradient_max_norm < o.tol_params);

  const InnerResult again = inner_maximize(r.params, c.spec, c.panel, c.in.cov, o);
  CHECK(again.iterations <= 1);
  CHECK(again.converged);
}

TEST_CASE("variance at the floor") {
  const Intercepts x = intercept_instance(6, 10, 0.0, 1, true);
  ModelSpec spec = x.spec;
  Params p = Params::zeros(6, spec);
  p.alpha_nu = std::log(20.0 * 6);
  p.sigma2[2] = 0.3;
  const auto vu = update_variances(p, spec, x.panel, x.cov, {});
  CHECK(vu.at_floor[2]);
  CHECK(vu.sigma2[2] == 1e-8);

  const FitResult f = fit(spec, x.panel, x.cov);
  CHECK(f.converged);
  CHECK(f.boundary[2]);
  CHECK(f.params.sigma2[2] == 1e-8);
  CHECK(f.params.b_nu.isZero(0.0));
}

TEST_CASE("variance fixed point of a single random intercept") {
  const std::size_t R = 40, T = 8;
  const Intercepts x = intercept_instance(R, T, 0.4, 5);
  const FitResult f = fit(x.spec, x.panel, x.cov);
  REQUIRE(f.converged);
  REQUIRE_FALSE(f.boundary[2]);
  const double s2 = f.params.sigma2[2];

  // Poisson information of (alpha, b): I_r = sum_t mu[r,t]
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(R + 1, R + 1);
  for (std::size_t r = 0; r < R; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    const double I = static_cast<double>(T - 1) * x.cov.pop_share[ri] * std::exp(f.params.alpha_nu + f.params.b_nu[ri]);
    H(0, 0) += I;
    H(0, ri + 1) = H(ri + 1, 0) = I;
    H(ri + 1, ri + 1) = I + 1.0 / s2;
  }
  const Eigen::MatrixXd A = H.inverse();
  const double trace = A.diagonal().tail(R).sum();
  const double analytic = (f.params.b_nu.squaredNorm() + trace) / static_cast<double>(R);
  CHECK(s2 == doctest::Approx(analytic).epsilon(1e-4));

  const auto vu = update_variances(f.params, x.spec, x.panel, x.cov, {});
  CHECK(vu.sigma2[2] == doctest::Approx(analytic).epsilon(1e-4));
  CHECK_FALSE(vu.at_floor[2]);
}

TEST_CASE("simulation recovery with R = 30, T = 40") {
  const Case c = simulated(5, 6, 40, 1);
  const FitResult f = fit(c.spec, c.panel, c.in.cov);
  REQUIRE(f.converged);
  CHECK(f.gradient_max_norm < 1e-6);
  CHECK(std::isnan(f.aic_like));
  const ParamLayout layout(c.spec, 30);
  const Eigen::VectorXd est = layout.pack(f.params), tru = layout.pack(c.truth);
  for (std::size_t i = 0; i < f.se.names.size(); ++i) {
    CAPTURE(f.se.names[i]);
    const double z = (est[static_cast<Eigen::Index>(i)] - tru[static_cast<Eigen::Index>(i)]) / f.se.values[static_cast<Eigen::Index>(i)];
    CHECK(std::abs(z) <= 3.0);
  }
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(f.params.sigma2[k] - c.truth.sigma2[k]) <= 0.5);
  CHECK(f.marginal_loglik_approx < f.penalized_loglik + 1e3);
  CHECK(std::isfinite(f.marginal_loglik_approx));
}

TEST_CASE("larger within-region variance") {
  Truth t;
  t.alpha_lambda = std::log(0.15);
  t.sigma2 = {1.0, 0.5, 1.0};
  double mean = 0.0;
  const int seeds = 5;
  for (int s = 1; s <= seeds; ++s) {
    const Case c = simulated(5, 10, 60, 40 + s, t);
    const FitResult f = fit(c.spec, c.panel, c.in.cov);
    CHECK(f.converged);
    mean += f.params.sigma2[0] / seeds;
  }
  CHECK(std::abs(mean - 1.0) <= 0.5);
}

TEST_CASE("iteration cap leaves a usable result") {
  const Case c = simulated(4, 5, 30, 4);
  FitOptions o;
  o.max_outer_iters = 1;
  const FitResult f = fit(c.spec, c.panel, c.in.cov, o);
  CHECK_FALSE(f.converged);
  CHECK(f.n_outer_iters == 1);
  CHECK(std::isfinite(f.penalized_loglik));
  CHECK(f.se.values.allFinite());
}

TEST_CASE("fits are bit-reproducible across kernel variants") {
  const Case c = simulated(4, 5, 30, 6);
  const kernels::Isa before = kernels::active().isa;
  std::vector<Eigen::VectorXd> runs;
  for (kernels::Isa isa : kernels::available()) {
    kernels::select(isa);
    runs.push_back(all_values(fit(c.spec, c.panel, c.in.cov)));
    runs.push_back(all_values(fit(c.spec, c.panel, c.in.cov)));
  }
  kernels::select(before);
  for (const auto& r : runs) CHECK(same_bits(r, runs.front()));
}

TEST_CASE("start overrides the warm start") {
  const Case c = simulated(3, 3, 30, 7);
  const FitResult a = fit(c.spec, c.panel, c.in.cov);
  FitOptions o;
  o.start = a.params;
  const FitResult b = fit(c.spec, c.panel, c.in.cov, o);
  CHECK(b.converged);
  CHECK(b.n_outer_iters <= 3);
  CHECK(b.penalized_loglik == doctest::Approx(a.penalized_loglik).epsilon(1e-8));

  FitOptions z;
  z.init = Init::Zeros;
  // From zeros the between component collapses; the fit still completes.
  const FitResult cold = fit(c.spec, c.panel, c.in.cov, z);
  CHECK(cold.converged);
  CHECK(std::isfinite(cold.penalized_loglik));
}
