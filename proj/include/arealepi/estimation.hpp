#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arealepi/data.hpp"
#include "arealepi/model.hpp"

namespace arealepi {

enum class Init { Zeros, EndemicGlmWarmstart };

const char* to_string(Init init);
Init init_from_string(const std::string& s);

struct FitOptions {
  int max_outer_iters = 100;
  int max_inner_iters = 50;
  /// Inner loop: gradient max-norm. Outer loop: max absolute change of
  /// parameters and variances between iterations.
  double tol_params = 1e-6;
  /// Relative change of the penalized log-likelihood between outer iterations.
  double tol_loglik = 1e-8;
  double sigma2_floor = 1e-8;
  Init init = Init::EndemicGlmWarmstart;
  /// Overrides `init` when set.
  std::optional<Params> start;
  /// Receives one line per outer iteration when set.
  std::ostream* log = nullptr;

  void validate() const;
};

struct FitResult {
  ModelSpec spec;
  std::vector<std::string> region_ids;
  Params params;
  /// Standard errors of the fixed effects and log psi on the estimation
  /// (log) scale. Variances have none.
  NamedVector se;
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  double marginal_loglik_approx = 0.0;
  /// -2 loglik + 2 p for specs without random effects, NaN otherwise.
  double aic_like = 0.0;
  bool converged = false;
  int n_outer_iters = 0;
  int n_inner_iters = 0;
  double gradient_max_norm = 0.0;
  /// Variance hit the floor; the component's deviations were frozen at 0.
  std::array<bool, 3> boundary{false, false, false};
};

/// Log-likelihood minus the Gaussian random-effect penalty (normalizing
/// constants included). Throws ZeroVariance when an active variance is
/// below `sigma2_floor`.
double penalized_loglik(const Params& p, const ModelSpec& spec, const CountPanel& panel, const RegionCovariates& cov,
                        double sigma2_floor = 1e-8);

struct InnerResult {
  Params params;
  int iterations = 0;
  bool converged = false;
  double penalized_loglik = 0.0;
  double gradient_max_norm = 0.0;
  /// Penalized log-likelihood at the start and after every accepted step.
  std::vector<double> trace;
};

/// Newton ascent (Fisher scoring when the observed information is not
/// positive definite) on fixed effects, deviations and log psi with the
/// variances held fixed. Throws SingularInformation, NonFiniteStep.
InnerResult inner_maximize(const Params& start, const ModelSpec& spec, const CountPanel& panel,
                           const RegionCovariates& cov, const FitOptions& options,
                           std::array<bool, 3> frozen = {false, false, false});

struct VarianceUpdate {
  std::array<double, 3> sigma2{1.0, 1.0, 1.0};
  std::array<bool, 3> at_floor{false, false, false};
};

/// Coordinate-wise maximization of the Laplace-approximate marginal
/// likelihood in each active variance, deviations held at their current
/// values.
VarianceUpdate update_variances(const Params& p, const ModelSpec& spec, const CountPanel& panel,
                                const RegionCovariates& cov, const FitOptions& options,
                                std::array<bool, 3> frozen = {false, false, false});

FitResult fit(const ModelSpec& spec, const CountPanel& panel, const RegionCovariates& cov,
              const FitOptions& options = {});

}  // namespace arealepi
