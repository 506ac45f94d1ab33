#include "arealepi/model.hpp"

#include <cmath>

#include "arealepi/error.hpp"
#include "arealepi/kernels.hpp"
#include "arealepi/negbin.hpp"

namespace arealepi {

const char* to_string(Overdispersion od) {
  switch (od) {
    case Overdispersion::None: return "none";
    case Overdispersion::Shared: return "shared";
    case Overdispersion::PerRegion: return "per_region";
  }
  return "shared";
}

Overdispersion overdispersion_from_string(const std::string& s) {
  if (s == "none") return Overdispersion::None;
  if (s == "shared") return Overdispersion::Shared;
  if (s == "per_region") return Overdispersion::PerRegion;
  throw Error(ErrorKind::InvalidInput, "overdispersion must be none|shared|per_region, got '" + s + "'");
}

// ---------------------------------------------------------------------------
// ModelSpec / Params
// ---------------------------------------------------------------------------

bool ModelSpec::enabled(Component c) const {
  switch (c) {
    case Component::Within: return lambda.enabled;
    case Component::Between: return phi.enabled;
    case Component::Endemic: return nu.enabled;
  }
  return false;
}

bool ModelSpec::random(Component c) const {
  switch (c) {
    case Component::Within: return lambda.enabled && lambda.random_intercept;
    case Component::Between: return phi.enabled && phi.random_intercept;
    case Component::Endemic: return nu.enabled && nu.random_intercept;
  }
  return false;
}

void ModelSpec::validate(std::size_t num_regions) const {
  if (!lambda.enabled && !phi.enabled && !nu.enabled) {
    throw Error(ErrorKind::InvalidInput, "at least one model component must be enabled");
  }
  if (phi.enabled) {
    if (!weights) throw Error(ErrorKind::InvalidInput, "between component enabled without a weight matrix");
    if (weights->size() != num_regions || static_cast<std::size_t>(weights->entries.cols()) != num_regions) {
      throw Error(ErrorKind::DimensionMismatch, "weight matrix is " + std::to_string(weights->entries.rows()) + "x" +
                                                    std::to_string(weights->entries.cols()) + " for " +
                                                    std::to_string(num_regions) + " regions");
    }
  }
}

Params Params::zeros(std::size_t num_regions, const ModelSpec& spec) {
  Params p;
  const auto n = static_cast<Eigen::Index>(num_regions);
  p.b_lambda = Eigen::VectorXd::Zero(n);
  p.b_phi = Eigen::VectorXd::Zero(n);
  p.b_nu = Eigen::VectorXd::Zero(n);
  switch (spec.overdispersion) {
    case Overdispersion::None: p.psi.resize(0); break;
    case Overdispersion::Shared: p.psi = Eigen::VectorXd::Ones(1); break;
    case Overdispersion::PerRegion: p.psi = Eigen::VectorXd::Ones(n); break;
  }
  return p;
}

double& Params::alpha(Component c) {
  switch (c) {
    case Component::Within: return alpha_lambda;
    case Component::Between: return alpha_phi;
    case Component::Endemic: break;
  }
  return alpha_nu;
}

double Params::alpha(Component c) const { return const_cast<Params*>(this)->alpha(c); }

Eigen::VectorXd& Params::b(Component c) {
  switch (c) {
    case Component::Within: return b_lambda;
    case Component::Between: return b_phi;
    case Component::Endemic: break;
  }
  return b_nu;
}

const Eigen::VectorXd& Params::b(Component c) const { return const_cast<Params*>(this)->b(c); }

double Params::psi_of(std::size_t r) const {
  if (psi.size() == 0) return 0.0;
  if (psi.size() == 1) return psi[0];
  return psi[static_cast<Eigen::Index>(r)];
}

double NamedVector::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[static_cast<Eigen::Index>(i)];
  }
  throw Error(ErrorKind::InvalidInput, "no parameter named '" + name + "'");
}

// ---------------------------------------------------------------------------
// ParamLayout
// ---------------------------------------------------------------------------

int ParamLayout::push(const std::string& name) {
  names_.push_back(name);
  return static_cast<int>(names_.size() - 1);
}

ParamLayout::ParamLayout(const ModelSpec& spec, std::size_t num_regions, std::array<bool, 3> frozen)
    : num_regions_(num_regions) {
  if (spec.lambda.enabled) alpha_[0] = push("alpha_lambda");
  if (spec.phi.enabled) {
    alpha_[1] = push("alpha_phi");
    if (spec.phi.log_pop_share) beta_phi_pop_ = push("beta_phi_pop");
  }
  if (spec.nu.enabled) {
    alpha_[2] = push("alpha_nu");
    if (spec.nu.t) beta_nu_t_ = push("beta_nu_t");
    if (spec.nu.t_squared) beta_nu_t2_ = push("beta_nu_t2");
    if (spec.nu.log_over65) beta_nu_age_ = push("beta_nu_age");
  }
  if (spec.overdispersion == Overdispersion::Shared) {
    log_psi_ = push("log_psi");
    num_log_psi_ = 1;
  } else if (spec.overdispersion == Overdispersion::PerRegion) {
    log_psi_ = static_cast<int>(names_.size());
    num_log_psi_ = num_regions;
    for (std::size_t r = 0; r < num_regions; ++r) push("log_psi[" + std::to_string(r) + "]");
  }
  num_fixed_ = names_.size();
  for (std::size_t c = 0; c < 3; ++c) {
    if (!spec.random(static_cast<Component>(c)) || frozen[c]) continue;
    b_offset_[c] = static_cast<int>(names_.size());
    for (std::size_t r = 0; r < num_regions; ++r) {
      push(std::string("b_") + kComponentNames[c] + "[" + std::to_string(r) + "]");
    }
  }
}

int ParamLayout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int ParamLayout::log_psi_for(std::size_t r) const {
  if (log_psi_ < 0) return -1;
  return num_log_psi_ == 1 ? log_psi_ : log_psi_ + static_cast<int>(r);
}

Eigen::VectorXd ParamLayout::pack(const Params& p) const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(size()));
  for (std::size_t c = 0; c < 3; ++c) {
    const auto comp = static_cast<Component>(c);
    if (alpha_[c] >= 0) theta[alpha_[c]] = p.alpha(comp);
    if (b_offset_[c] >= 0) {
      for (std::size_t r = 0; r < num_regions_; ++r) {
        theta[b_offset_[c] + static_cast<Eigen::Index>(r)] = p.b(comp)[static_cast<Eigen::Index>(r)];
      }
    }
  }
  if (beta_phi_pop_ >= 0) theta[beta_phi_pop_] = p.beta_phi_pop;
  if (beta_nu_t_ >= 0) theta[beta_nu_t_] = p.beta_nu_t;
  if (beta_nu_t2_ >= 0) theta[beta_nu_t2_] = p.beta_nu_t2;
  if (beta_nu_age_ >= 0) theta[beta_nu_age_] = p.beta_nu_age;
  for (std::size_t k = 0; k < num_log_psi_; ++k) {
    theta[log_psi_ + static_cast<Eigen::Index>(k)] = std::log(p.psi[static_cast<Eigen::Index>(k)]);
  }
  return theta;
}

Params ParamLayout::unpack(const Eigen::VectorXd& theta, Params p) const {
  for (std::size_t c = 0; c < 3; ++c) {
    const auto comp = static_cast<Component>(c);
    if (alpha_[c] >= 0) p.alpha(comp) = theta[alpha_[c]];
    if (b_offset_[c] >= 0) {
      p.b(comp) = theta.segment(b_offset_[c], static_cast<Eigen::Index>(num_regions_));
    }
  }
  if (beta_phi_pop_ >= 0) p.beta_phi_pop = theta[beta_phi_pop_];
  if (beta_nu_t_ >= 0) p.beta_nu_t = theta[beta_nu_t_];
  if (beta_nu_t2_ >= 0) p.beta_nu_t2 = theta[beta_nu_t2_];
  if (beta_nu_age_ >= 0) p.beta_nu_age = theta[beta_nu_age_];
  if (num_log_psi_ > 0) {
    p.psi = theta.segment(log_psi_, static_cast<Eigen::Index>(num_log_psi_)).array().exp();
  }
  return p;
}

// ---------------------------------------------------------------------------
// Predictors and means
// ---------------------------------------------------------------------------

namespace {

double deviation(const ModelSpec& spec, const Params& p, Component c, std::size_t r) {
  if (!spec.random(c)) return 0.0;
  const auto& b = p.b(c);
  return b.size() == 0 ? 0.0 : b[static_cast<Eigen::Index>(r)];
}

double within_coef(const ModelSpec& spec, const Params& p, std::size_t r) {
  if (!spec.lambda.enabled) return 0.0;
  return std::exp(p.alpha_lambda + deviation(spec, p, Component::Within, r));
}

double between_coef(const ModelSpec& spec, const Params& p, double log_e, std::size_t r) {
  if (!spec.phi.enabled) return 0.0;
  double eta = p.alpha_phi + deviation(spec, p, Component::Between, r);
  if (spec.phi.log_pop_share) eta += p.beta_phi_pop * log_e;
  return std::exp(eta);
}

// Time-independent part of log nu.
double endemic_base(const ModelSpec& spec, const Params& p, double log_a, std::size_t r) {
  double eta = p.alpha_nu + deviation(spec, p, Component::Endemic, r);
  if (spec.nu.log_over65) eta += p.beta_nu_age * log_a;
  return eta;
}

double endemic_trend(const ModelSpec& spec, const Params& p, double t) {
  double eta = 0.0;
  if (spec.nu.t) eta += p.beta_nu_t * t;
  if (spec.nu.t_squared) eta += p.beta_nu_t2 * (t * t);
  return eta;
}

}  // namespace

Predictors predictors(const Params& p, const ModelSpec& spec, const RegionCovariates& cov, int t) {
  const auto n = static_cast<Eigen::Index>(cov.size());
  Predictors out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  const double td = static_cast<double>(t + spec.time_offset);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    out.lambda[r] = within_coef(spec, p, ru);
    out.phi[r] = between_coef(spec, p, std::log(cov.pop_share[r]), ru);
    if (spec.nu.enabled) {
      out.nu[r] = std::exp(endemic_base(spec, p, std::log(cov.over65[r]), ru) + endemic_trend(spec, p, td));
    }
  }
  return out;
}

RowMatrix neighbour_sums(const WeightMatrix& w, const RowMatrix& q) {
  const auto& k = kernels::active();
  RowMatrix s = RowMatrix::Zero(q.rows(), q.cols());
  const auto n = static_cast<std::size_t>(q.cols());
  for (Eigen::Index r = 0; r < w.entries.rows(); ++r) {
    for (Eigen::Index src = 0; src < w.entries.cols(); ++src) {
      const double weight = w.entries(r, src);
      if (weight != 0.0) k.axpy(weight, q.row(src).data(), s.row(r).data(), n);
    }
  }
  return s;
}

PanelModel::PanelModel(ModelSpec spec, const CountPanel& panel, const RegionCovariates& cov)
    : spec_(std::move(spec)), cov_(cov), num_regions_(panel.num_regions()) {
  if (cov.size() != num_regions_) {
    throw Error(ErrorKind::DimensionMismatch, "covariates cover " + std::to_string(cov.size()) + " regions, panel " +
                                                  std::to_string(num_regions_));
  }
  spec_.validate(num_regions_);
  const auto days = panel.num_days();
  if (days < 2) throw Error(ErrorKind::InvalidInput, "the model needs at least two days of counts");
  num_obs_ = days - 1;
  const auto R = static_cast<Eigen::Index>(num_regions_);
  const auto n = static_cast<Eigen::Index>(num_obs_);
  const RowMatrix counts = panel.counts().cast<double>();
  y_ = counts.rightCols(n);
  ylag_ = counts.leftCols(n);
  y_last_ = counts.col(n);
  RowMatrix s = RowMatrix::Zero(R, n + 1);
  if (spec_.phi.enabled) {
    RowMatrix q = counts;
    if (!spec_.between_uses_counts) {
      for (Eigen::Index r = 0; r < R; ++r) q.row(r) /= cov.pop_share[r];
    }
    s = neighbour_sums(*spec_.weights, q);
  }
  slag_ = s.leftCols(n);
  s_last_ = s.col(n);
  t_.resize(n);
  t2_.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    t_[j] = static_cast<double>(j + 2 + spec_.time_offset);
    t2_[j] = t_[j] * t_[j];
  }
  log_e_ = cov.pop_share.array().log();
  log_a_ = cov.over65.array().log();
}

double PanelModel::lambda_of(const Params& p, std::size_t r) const { return within_coef(spec_, p, r); }

double PanelModel::phi_of(const Params& p, std::size_t r) const {
  return between_coef(spec_, p, log_e_[static_cast<Eigen::Index>(r)], r);
}

void PanelModel::endemic_row(const Params& p, std::size_t r, double* out) const {
  if (!spec_.nu.enabled) {
    std::fill(out, out + num_obs_, 0.0);
    return;
  }
  const auto ri = static_cast<Eigen::Index>(r);
  const double base = endemic_base(spec_, p, log_a_[ri], r);
  const double e = cov_.pop_share[ri];
  for (std::size_t j = 0; j < num_obs_; ++j) {
    out[j] = e * std::exp(base + endemic_trend(spec_, p, t_[static_cast<Eigen::Index>(j)]));
  }
}

Predictors PanelModel::predictors(const Params& p, int t) const { return arealepi::predictors(p, spec_, cov_, t); }

ComponentMeans PanelModel::mean(const Params& p) const {
  const auto R = static_cast<Eigen::Index>(num_regions_);
  const auto n = static_cast<Eigen::Index>(num_obs_);
  ComponentMeans m{RowMatrix(R, n), RowMatrix(R, n), RowMatrix(R, n), RowMatrix(R, n)};
  const auto& k = kernels::active();
  for (Eigen::Index r = 0; r < R; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    endemic_row(p, ru, m.endemic.row(r).data());
    k.component_means(lambda_of(p, ru), ylag_.row(r).data(), phi_of(p, ru), slag_.row(r).data(),
                      m.endemic.row(r).data(), m.within.row(r).data(), m.between.row(r).data(),
                      m.total.row(r).data(), num_obs_);
  }
  return m;
}

DayMeans PanelModel::next_day(const Params& p) const {
  const auto R = static_cast<Eigen::Index>(num_regions_);
  DayMeans d{Eigen::VectorXd(R), Eigen::VectorXd(R), Eigen::VectorXd(R), Eigen::VectorXd(R)};
  const double t = static_cast<double>(num_obs_ + 2) + spec_.time_offset;
  for (Eigen::Index r = 0; r < R; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    d.within[r] = lambda_of(p, ru) * y_last_[r];
    d.between[r] = phi_of(p, ru) * s_last_[r];
    d.endemic[r] =
        spec_.nu.enabled ? cov_.pop_share[r] * std::exp(endemic_base(spec_, p, log_a_[r], ru) + endemic_trend(spec_, p, t))
                         : 0.0;
    d.total[r] = (d.within[r] + d.between[r]) + d.endemic[r];
  }
  return d;
}

namespace {

// Log-likelihood contribution with the underflow guard; false if guarded.
bool obs_loglik(double y, double mu, double psi, double& out) {
  if (mu > 0.0 && std::isfinite(mu)) {
    out = nb_loglik(static_cast<std::int64_t>(y), mu, psi);
    return true;
  }
  if (mu == 0.0 && y == 0.0) {
    out = 0.0;
    return true;
  }
  out = kLogLikGuard;
  return false;
}

}  // namespace

PanelLogLik PanelModel::loglik(const Params& p) const {
  PanelLogLik out;
  std::vector<double> within(num_obs_), between(num_obs_), endemic(num_obs_), total(num_obs_);
  const auto& k = kernels::active();
  for (std::size_t r = 0; r < num_regions_; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    endemic_row(p, r, endemic.data());
    k.component_means(lambda_of(p, r), ylag_.row(ri).data(), phi_of(p, r), slag_.row(ri).data(), endemic.data(),
                      within.data(), between.data(), total.data(), num_obs_);
    const double psi = spec_.overdispersion == Overdispersion::None ? 0.0 : p.psi_of(r);
    for (std::size_t j = 0; j < num_obs_; ++j) {
      double term = 0.0;
      if (!obs_loglik(y_(ri, static_cast<Eigen::Index>(j)), total[j], psi, term)) ++out.guarded;
      out.value += term;
    }
  }
  return out;
}

PanelModel::Derivatives PanelModel::derivatives(const Params& p, const ParamLayout& layout, bool second_order) const {
  const auto P = static_cast<Eigen::Index>(layout.size());
  Derivatives out;
  out.gradient = Eigen::VectorXd::Zero(P);
  if (second_order) {
    out.hessian = Eigen::MatrixXd::Zero(P, P);
    out.fisher = Eigen::MatrixXd::Zero(P, P);
  }
  const std::size_t n = num_obs_;
  std::vector<double> within(n), between(n), endemic(n), total(n), score(n), info(n), curv(n), d3(n), d4(n), dmk(n);
  std::vector<char> bad(n, 0);
  const double* local[5] = {within.data(), between.data(), endemic.data(), d3.data(), d4.data()};
  const auto& k = kernels::active();

  struct Entry {
    int index;
    double coef;
  };
  std::array<std::vector<Entry>, 6> map;

  for (std::size_t r = 0; r < num_regions_; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    const double* y = y_.row(ri).data();
    endemic_row(p, r, endemic.data());
    k.component_means(lambda_of(p, r), ylag_.row(ri).data(), phi_of(p, r), slag_.row(ri).data(), endemic.data(),
                      within.data(), between.data(), total.data(), n);
    const double psi = spec_.overdispersion == Overdispersion::None ? 0.0 : p.psi_of(r);

    bool any_bad = false;
    for (std::size_t j = 0; j < n; ++j) {
      double term = 0.0;
      if (!obs_loglik(y[j], total[j], psi, term)) ++out.guarded;
      out.loglik += term;
      // Observations without a positive finite mean carry no derivative
      // information (zero mean with zero count) or are guarded.
      bad[j] = !(total[j] > 0.0 && std::isfinite(total[j]));
      if (bad[j]) {
        any_bad = true;
        total[j] = 1.0;
        within[j] = between[j] = endemic[j] = 0.0;
      }
    }
    k.nb_terms(y, total.data(), psi, score.data(), info.data(), curv.data(), n);
    if (any_bad) {
      for (std::size_t j = 0; j < n; ++j) {
        if (bad[j]) score[j] = info[j] = curv[j] = 0.0;
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      d3[j] = endemic[j] * t_[static_cast<Eigen::Index>(j)];
      d4[j] = endemic[j] * t2_[static_cast<Eigen::Index>(j)];
    }

    for (auto& m : map) m.clear();
    const auto add = [&](std::size_t slot, int index, double coef) {
      if (index >= 0) map[slot].push_back({index, coef});
    };
    for (std::size_t c = 0; c < 3; ++c) {
      const auto comp = static_cast<Component>(c);
      add(c, layout.alpha(comp), 1.0);
      if (layout.b_offset(comp) >= 0) add(c, layout.b_offset(comp) + static_cast<int>(r), 1.0);
    }
    add(1, layout.beta_phi_pop(), log_e_[ri]);
    add(2, layout.beta_nu_age(), log_a_[ri]);
    add(3, layout.beta_nu_t(), 1.0);
    add(4, layout.beta_nu_t2(), 1.0);
    const int kappa_index = layout.log_psi_for(r);
    add(5, kappa_index, 1.0);

    std::array<double, 6> g{};
    for (std::size_t a = 0; a < 5; ++a) {
      if (!map[a].empty()) g[a] = k.dot(score.data(), local[a], n);
    }
    double h_kk = 0.0;
    if (kappa_index >= 0) {
      for (std::size_t j = 0; j < n; ++j) {
        if (bad[j]) {
          dmk[j] = 0.0;
          continue;
        }
        const auto kt = nb_kappa_terms(y[j], total[j], psi);
        g[5] += kt.d_kappa;
        h_kk += kt.d2_kappa;
        dmk[j] = kt.d_mu_kappa;
      }
    }
    for (std::size_t a = 0; a < 6; ++a) {
      for (const auto& e : map[a]) out.gradient[e.index] += e.coef * g[a];
    }
    if (!second_order) continue;

    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 6> f = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t a = 0; a < 5; ++a) {
      if (map[a].empty()) continue;
      for (std::size_t b = a; b < 5; ++b) {
        if (map[b].empty()) continue;
        h(a, b) = k.dot3(curv.data(), local[a], local[b], n);
        f(a, b) = k.dot3(info.data(), local[a], local[b], n);
      }
    }
    // Second derivatives of mu with respect to the local coordinates.
    h(0, 0) += g[0];
    h(1, 1) += g[1];
    h(2, 2) += g[2];
    h(2, 3) += g[3];
    h(2, 4) += g[4];
    if (!map[3].empty()) h(3, 3) += k.dot(score.data(), d4.data(), n);
    h(3, 4) += k.dot3(score.data(), d4.data(), t_.data(), n);
    h(4, 4) += k.dot3(score.data(), d4.data(), t2_.data(), n);
    if (kappa_index >= 0) {
      for (std::size_t a = 0; a < 5; ++a) {
        if (!map[a].empty()) h(a, 5) = k.dot(dmk.data(), local[a], n);
      }
      h(5, 5) = h_kk;
      f(5, 5) = -h_kk;
    }
    for (std::size_t a = 0; a < 6; ++a) {
      for (std::size_t b = a; b < 6; ++b) {
        const double hv = h(a, b);
        const double fv = f(a, b);
        if (hv == 0.0 && fv == 0.0) continue;
        for (const auto& ea : map[a]) {
          for (const auto& eb : map[b]) {
            const double ch = ea.coef * eb.coef;
            out.hessian(ea.index, eb.index) += ch * hv;
            out.fisher(ea.index, eb.index) += ch * fv;
            if (a != b) {
              out.hessian(eb.index, ea.index) += ch * hv;
              out.fisher(eb.index, ea.index) += ch * fv;
            }
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Free-function surface
// ---------------------------------------------------------------------------

ComponentMeans mean(const Params& p, const ModelSpec& spec, const CountPanel& panel, const RegionCovariates& cov) {
  return PanelModel(spec, panel, cov).mean(p);
}

PanelLogLik panel_loglik(const Params& p, const ModelSpec& spec, const CountPanel& panel,
                         const RegionCovariates& cov) {
  return PanelModel(spec, panel, cov).loglik(p);
}

NamedVector loglik_gradient(const Params& p, const ModelSpec& spec, const CountPanel& panel,
                            const RegionCovariates& cov) {
  const PanelModel model(spec, panel, cov);
  const ParamLayout layout(spec, panel.num_regions());
  auto d = model.derivatives(p, layout, false);
  if (!d.gradient.allFinite()) throw Error(ErrorKind::NonFiniteGradient, "log-likelihood gradient is not finite");
  return NamedVector{layout.names(), std::move(d.gradient)};
}

}  // namespace arealepi
