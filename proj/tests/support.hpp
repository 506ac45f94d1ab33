#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "arealepi/data.hpp"
#include "arealepi/error.hpp"
#include "arealepi/forecast.hpp"
#include "arealepi/graph.hpp"
#include "arealepi/model.hpp"

namespace testsupport {

using namespace arealepi;

struct Instance {
  RegionSet regions;
  BorderList borders;
  std::shared_ptr<WeightMatrix> weights;
  RegionCovariates cov;
};

// Kind of the arealepi::Error thrown by f, or nullopt.
template <class F>
std::optional<ErrorKind> error_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline RegionSet named_regions(const std::vector<std::string>& ids) {
  std::vector<Region> regs;
  for (const auto& id : ids) regs.push_back({id, ""});
  return RegionSet(regs);
}

inline std::string region_id(std::size_t i) { return "R" + std::to_string(i); }

// Rook-adjacent grid of regions with random population shares and ages.
inline Instance grid_instance(std::size_t rows, std::size_t cols, std::uint64_t seed, bool normalize = true) {
  Instance in;
  const std::size_t R = rows * cols;
  std::vector<Region> regs;
  for (std::size_t i = 0; i < R; ++i) regs.push_back({region_id(i), ""});
  in.regions = RegionSet(regs);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      if (c + 1 < cols) in.borders.emplace_back(region_id(i), region_id(i + 1));
      if (r + 1 < rows) in.borders.emplace_back(region_id(i), region_id(i + cols));
    }
  }
  const auto adj = build_adjacency(in.regions, in.borders);
  in.weights = std::make_shared<WeightMatrix>(build_weights(neighbor_order(adj), 2, normalize));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> share(0.5, 1.5), age(0.15, 0.3);
  in.cov.pop_share.resize(static_cast<Eigen::Index>(R));
  in.cov.over65.resize(static_cast<Eigen::Index>(R));
  for (std::size_t i = 0; i < R; ++i) {
    in.cov.pop_share[static_cast<Eigen::Index>(i)] = share(rng);
    in.cov.over65[static_cast<Eigen::Index>(i)] = age(rng);
  }
  in.cov.pop_share /= in.cov.pop_share.sum();
  return in;
}

inline ModelSpec full_spec(const Instance& in) {
  ModelSpec s;
  s.weights = in.weights;
  return s;
}

inline ModelSpec fixed_spec(const Instance& in) {
  ModelSpec s = full_spec(in);
  s.lambda.random_intercept = false;
  s.phi.random_intercept = false;
  s.nu.random_intercept = false;
  return s;
}

// Spectral radius of the mean's dependence on the previous day.
inline double growth_radius(const Params& p, const ModelSpec& spec, const RegionCovariates& cov) {
  const Predictors pr = predictors(p, spec, cov, 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(cov.pop_share.size(), cov.pop_share.size());
  if (spec.phi.enabled) {
    m = pr.phi.asDiagonal() * spec.weights->entries;
    if (!spec.between_uses_counts) m = m * cov.pop_share.cwiseInverse().asDiagonal();
  }
  m.diagonal() += pr.lambda;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct Truth {
  double alpha_lambda = std::log(0.25);
  double alpha_phi = std::log(0.15);
  double psi = 0.1;
  std::array<double, 3> sigma2{0.5, 0.5, 1.0};
  double max_radius = 0.9;
};

// Subcritical parameters with counts in the tens. Deviations are rescaled to
// sample variance sigma2 exactly; draws above the growth-radius bound are
// redrawn.
inline Params truth_params(const ModelSpec& spec, const RegionCovariates& cov, std::uint64_t seed,
                           const Truth& t = {}) {
  const auto R = static_cast<std::size_t>(cov.pop_share.size());
  Params p = Params::zeros(R, spec);
  p.alpha_lambda = t.alpha_lambda;
  p.alpha_phi = t.alpha_phi;
  p.beta_phi_pop = 1.0;
  p.alpha_nu = 7.7 + std::log(50.0 / static_cast<double>(R));
  p.beta_nu_t = 0.05;
  p.beta_nu_t2 = -0.0005;
  p.beta_nu_age = 1.0;
  p.sigma2 = t.sigma2;
  if (p.psi.size() > 0) p.psi.setConstant(t.psi);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (std::size_t c = 0; c < 3; ++c) {
      const auto comp = static_cast<Component>(c);
      if (!spec.random(comp)) continue;
      Eigen::VectorXd b(static_cast<Eigen::Index>(R));
      for (auto& v : b) v = z(rng);
      b.array() -= b.mean();
      b *= std::sqrt(t.sigma2[c] * static_cast<double>(R) / b.squaredNorm());
      p.b(comp) = b;
    }
    if (growth_radius(p, spec, cov) <= t.max_radius) return p;
  }
  throw std::runtime_error("no subcritical draw");
}

inline std::vector<std::int64_t> initial_counts(const Params& p, const ModelSpec& spec, const RegionCovariates& cov) {
  const Predictors pr = predictors(p, spec, cov, 1);
  std::vector<std::int64_t> y0;
  for (Eigen::Index r = 0; r < cov.pop_share.size(); ++r) {
    y0.push_back(std::max<std::int64_t>(1, std::llround(cov.pop_share[r] * pr.nu[r])));
  }
  return y0;
}

inline CountPanel simulate_panel(const Params& p, const ModelSpec& spec, const Instance& in, std::size_t days,
                                 std::uint64_t seed) {
  SimulateOptions so;
  so.days = days;
  so.seed = seed;
  return simulate(p, spec, in.regions, in.cov, initial_counts(p, spec, in.cov), so);
}

// Central differences of the panel log-likelihood over the free parameters.
inline Eigen::VectorXd fd_gradient(const Params& p, const ModelSpec& spec, const CountPanel& panel,
                                   const RegionCovariates& cov, double h = 1e-6) {
  const ParamLayout layout(spec, panel.num_regions());
  const Eigen::VectorXd theta = layout.pack(p);
  Eigen::VectorXd g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd up = theta, dn = theta;
    up[i] += h;
    dn[i] -= h;
    g[i] = (panel_loglik(layout.unpack(up, p), spec, panel, cov).value -
            panel_loglik(layout.unpack(dn, p), spec, panel, cov).value) /
           (2 * h);
  }
  return g;
}

// Random parameter point with every free entry perturbed.
inline Params random_params(const ModelSpec& spec, std::size_t R, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Params p = Params::zeros(R, spec);
  p.alpha_lambda = std::log(0.3) + 0.3 * u(rng);
  p.alpha_phi = std::log(0.1) + 0.3 * u(rng);
  p.beta_phi_pop = 0.5 * u(rng);
  p.alpha_nu = std::log(20.0 * static_cast<double>(R)) + 0.3 * u(rng);
  p.beta_nu_t = 0.05 * u(rng);
  p.beta_nu_t2 = 0.002 * u(rng);
  p.beta_nu_age = 0.5 * u(rng);
  for (auto& v : p.b_lambda) v = 0.3 * u(rng);
  for (auto& v : p.b_phi) v = 0.3 * u(rng);
  for (auto& v : p.b_nu) v = 0.3 * u(rng);
  for (auto& v : p.psi) v = std::exp(std::log(0.2) + u(rng));
  for (auto& s : p.sigma2) s = 0.5 + 0.4 * u(rng);
  return p;
}

}  // namespace testsupport
