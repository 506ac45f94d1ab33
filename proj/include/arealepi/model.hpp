#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arealepi/data.hpp"
#include "arealepi/graph.hpp"

namespace arealepi {

// Expected count of region r on day t:
//
//   mu[r,t] = lambda[r] Y[r,t-1] + phi[r,t] sum_s w[s,r] Q[s,t-1] + e[r] nu[r,t]
//
//   log lambda[r]  = alpha_lambda + b_lambda[r]
//   log phi[r,t]   = alpha_phi + b_phi[r] + beta_phi_pop log e[r]
//   log nu[r,t]    = alpha_nu + b_nu[r] + beta_nu_t t + beta_nu_t2 t^2 + beta_nu_age log a[r]
//
// with t the 1-based day index of the panel, Q = Y / e the incidence, and
// Y[r,t] ~ NB(mu[r,t], psi[r]). The likelihood conditions on the first day.

enum class Component : std::size_t { Within = 0, Between = 1, Endemic = 2 };
inline constexpr std::array<const char*, 3> kComponentNames{"lambda", "phi", "nu"};

enum class Overdispersion { None, Shared, PerRegion };

const char* to_string(Overdispersion od);
Overdispersion overdispersion_from_string(const std::string& s);

struct ModelSpec {
  struct Within {
    bool enabled = true;
    bool random_intercept = true;
  } lambda;
  struct Between {
    bool enabled = true;
    bool random_intercept = true;
    bool log_pop_share = true;
  } phi;
  struct Endemic {
    bool enabled = true;
    bool random_intercept = true;
    bool t = true;
    bool t_squared = true;
    bool log_over65 = true;
  } nu;
  Overdispersion overdispersion = Overdispersion::Shared;
  /// Use raw neighbour counts instead of incidence in the between term.
  bool between_uses_counts = false;
  /// Added to the 1-based day index in the endemic trend.
  int time_offset = 0;
  std::shared_ptr<const WeightMatrix> weights;

  bool enabled(Component c) const;
  bool random(Component c) const;
  /// Throws InvalidInput / DimensionMismatch.
  void validate(std::size_t num_regions) const;
};

struct Params {
  double alpha_lambda = 0.0;
  double alpha_phi = 0.0;
  double alpha_nu = 0.0;
  Eigen::VectorXd b_lambda;
  Eigen::VectorXd b_phi;
  Eigen::VectorXd b_nu;
  double beta_phi_pop = 0.0;
  double beta_nu_t = 0.0;
  double beta_nu_t2 = 0.0;
  double beta_nu_age = 0.0;
  std::array<double, 3> sigma2{1.0, 1.0, 1.0};
  /// Empty (Poisson), one shared value, or one value per region.
  Eigen::VectorXd psi;

  /// All-zero parameters shaped for `spec` (psi = 1 when overdispersed).
  static Params zeros(std::size_t num_regions, const ModelSpec& spec);

  double& alpha(Component c);
  double alpha(Component c) const;
  Eigen::VectorXd& b(Component c);
  const Eigen::VectorXd& b(Component c) const;
  double psi_of(std::size_t r) const;
  std::size_t num_regions() const { return static_cast<std::size_t>(b_lambda.size()); }
};

/// Positions of the free (unconstrained) parameters in the estimation vector.
/// Order: alpha_lambda, alpha_phi, beta_phi_pop, alpha_nu, beta_nu_t,
/// beta_nu_t2, beta_nu_age, log_psi..., b_lambda..., b_phi..., b_nu...
/// Terms disabled in the spec (or random effects listed in `frozen`) have no
/// position.
class ParamLayout {
 public:
  ParamLayout(const ModelSpec& spec, std::size_t num_regions, std::array<bool, 3> frozen = {false, false, false});

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  /// -1 when absent.
  int index_of(const std::string& name) const;

  int alpha(Component c) const { return alpha_[static_cast<std::size_t>(c)]; }
  int b_offset(Component c) const { return b_offset_[static_cast<std::size_t>(c)]; }
  int beta_phi_pop() const { return beta_phi_pop_; }
  int beta_nu_t() const { return beta_nu_t_; }
  int beta_nu_t2() const { return beta_nu_t2_; }
  int beta_nu_age() const { return beta_nu_age_; }
  int log_psi_offset() const { return log_psi_; }
  std::size_t num_log_psi() const { return num_log_psi_; }
  /// Position of log psi for region r, or -1.
  int log_psi_for(std::size_t r) const;
  /// Number of leading entries that are not random-effect deviations.
  std::size_t num_fixed() const { return num_fixed_; }
  std::size_t num_regions() const { return num_regions_; }

  Eigen::VectorXd pack(const Params& p) const;
  /// Copies entries of `theta` into `base`; parameters without a position
  /// keep their value in `base`.
  Params unpack(const Eigen::VectorXd& theta, Params base) const;

 private:
  int push(const std::string& name);

  std::size_t num_regions_;
  std::vector<std::string> names_;
  std::array<int, 3> alpha_{-1, -1, -1};
  std::array<int, 3> b_offset_{-1, -1, -1};
  int beta_phi_pop_ = -1, beta_nu_t_ = -1, beta_nu_t2_ = -1, beta_nu_age_ = -1;
  int log_psi_ = -1;
  std::size_t num_log_psi_ = 0;
  std::size_t num_fixed_ = 0;
};

/// Per-region subcomponent values on one day.
struct Predictors {
  Eigen::VectorXd lambda;
  Eigen::VectorXd phi;
  Eigen::VectorXd nu;
};

/// Region x (T-1) component matrices for days 2..T.
struct ComponentMeans {
  RowMatrix within;
  RowMatrix between;
  RowMatrix endemic;
  RowMatrix total;
};

/// Per-region component vectors for a single day.
struct DayMeans {
  Eigen::VectorXd within;
  Eigen::VectorXd between;
  Eigen::VectorXd endemic;
  Eigen::VectorXd total;
};

/// Per-observation log-likelihood floor used when mu underflows to zero (or
/// overflows) while the count is positive.
inline constexpr double kLogLikGuard = -1e30;

struct PanelLogLik {
  double value = 0.0;
  /// Observations whose term was replaced by kLogLikGuard.
  std::size_t guarded = 0;
};

/// Gradient with parameter names aligned to a ParamLayout.
struct NamedVector {
  std::vector<std::string> names;
  Eigen::VectorXd values;

  double at(const std::string& name) const;
};

/// Pre-computed view of a panel for repeated likelihood evaluation.
class PanelModel {
 public:
  PanelModel(ModelSpec spec, const CountPanel& panel, const RegionCovariates& cov);

  const ModelSpec& spec() const { return spec_; }
  std::size_t num_regions() const { return num_regions_; }
  std::size_t num_obs_days() const { return num_obs_; }
  const RegionCovariates& covariates() const { return cov_; }

  /// Subcomponents at 1-based day index `t` (before time_offset).
  Predictors predictors(const Params& p, int t) const;
  ComponentMeans mean(const Params& p) const;
  /// Components for the day after the last panel day.
  DayMeans next_day(const Params& p) const;

  PanelLogLik loglik(const Params& p) const;

  struct Derivatives {
    double loglik = 0.0;
    std::size_t guarded = 0;
    Eigen::VectorXd gradient;
    /// Observed Hessian of the log-likelihood.
    Eigen::MatrixXd hessian;
    /// Expected information of the mean parameters; the log-psi diagonal
    /// holds the observed information.
    Eigen::MatrixXd fisher;
  };

  Derivatives derivatives(const Params& p, const ParamLayout& layout, bool second_order) const;

 private:
  void endemic_row(const Params& p, std::size_t r, double* out) const;
  double lambda_of(const Params& p, std::size_t r) const;
  double phi_of(const Params& p, std::size_t r) const;

  ModelSpec spec_;
  RegionCovariates cov_;
  std::size_t num_regions_;
  std::size_t num_obs_;
  RowMatrix y_;     // counts on days 2..T
  RowMatrix ylag_;  // counts on days 1..T-1
  RowMatrix slag_;  // sum_s w[r,s] Q[s,t-1]
  Eigen::VectorXd s_last_;  // neighbour sum on day T
  Eigen::VectorXd y_last_;
  Eigen::VectorXd t_;   // trend index of each observation day
  Eigen::VectorXd t2_;
  Eigen::VectorXd log_e_;
  Eigen::VectorXd log_a_;
};

Predictors predictors(const Params& p, const ModelSpec& spec, const RegionCovariates& cov, int t);
ComponentMeans mean(const Params& p, const ModelSpec& spec, const CountPanel& panel, const RegionCovariates& cov);
PanelLogLik panel_loglik(const Params& p, const ModelSpec& spec, const CountPanel& panel, const RegionCovariates& cov);
/// Analytic gradient over the free parameters. Throws NonFiniteGradient.
NamedVector loglik_gradient(const Params& p, const ModelSpec& spec, const CountPanel& panel,
                            const RegionCovariates& cov);

/// Neighbour sums S = W Q for every day of `q` (region x day, row major).
RowMatrix neighbour_sums(const WeightMatrix& w, const RowMatrix& q);

}  // namespace arealepi
