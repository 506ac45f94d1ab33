#include "arealepi/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>

#include <boost/math/tools/toms748_solve.hpp>

#include "arealepi/error.hpp"

namespace arealepi {

namespace {

constexpr double kSigma2Max = 1e4;
constexpr double kRankTol = 1e-12;
constexpr double kRidge = 1e-8;
constexpr int kMaxHalvings = 40;
constexpr double kRoundoff = 1e-12;

bool active(const ParamLayout& layout, std::size_t c) { return layout.b_offset(static_cast<Component>(c)) >= 0; }

void check_variances(const Params& p, const ParamLayout& layout, double floor) {
  for (std::size_t c = 0; c < 3; ++c) {
    if (!active(layout, c)) continue;
    const double s2 = p.sigma2[c];
    if (!std::isfinite(s2) || s2 < floor || s2 <= 0.0) {
      throw Error(ErrorKind::ZeroVariance, std::string("variance of b_") + kComponentNames[c] + " is " +
                                               std::to_string(s2) + ", below the floor");
    }
  }
}

double penalty(const Params& p, const ParamLayout& layout) {
  const auto R = static_cast<double>(layout.num_regions());
  double out = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    if (!active(layout, c)) continue;
    const double s2 = p.sigma2[c];
    out -= 0.5 * (p.b(static_cast<Component>(c)).squaredNorm() / s2 + R * std::log(2.0 * std::numbers::pi * s2));
  }
  return out;
}

// Adds the penalty's gradient and (negative) curvature to a derivative set.
void add_penalty(const Params& p, const ParamLayout& layout, PanelModel::Derivatives& d, bool second_order) {
  const auto R = static_cast<Eigen::Index>(layout.num_regions());
  for (std::size_t c = 0; c < 3; ++c) {
    if (!active(layout, c)) continue;
    const auto off = layout.b_offset(static_cast<Component>(c));
    const double prec = 1.0 / p.sigma2[c];
    d.gradient.segment(off, R) -= prec * p.b(static_cast<Component>(c));
    if (second_order) {
      for (Eigen::Index r = 0; r < R; ++r) {
        d.hessian(off + r, off + r) -= prec;
        d.fisher(off + r, off + r) += prec;
      }
    }
  }
}

Eigen::VectorXd diag_scale(const Eigen::MatrixXd& m) {
  Eigen::VectorXd s(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double v = m(i, i);
    s[i] = (std::isfinite(v) && v > 0.0) ? 1.0 / std::sqrt(v) : 1.0;
  }
  return s;
}

// Fisher information with the log-psi diagonal made positive.
Eigen::MatrixXd clamped_fisher(const Eigen::MatrixXd& fisher, const ParamLayout& layout) {
  Eigen::MatrixXd f = fisher;
  for (std::size_t k = 0; k < layout.num_log_psi(); ++k) {
    const auto i = layout.log_psi_offset() + static_cast<Eigen::Index>(k);
    if (!(f(i, i) > 0.0)) f(i, i) = std::abs(f(i, i)) + 1.0;
  }
  return f;
}

struct Solver {
  Eigen::VectorXd scale;
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool ok = false;
};

Solver factor(const Eigen::MatrixXd& info) {
  Solver s;
  s.scale = diag_scale(info);
  Eigen::MatrixXd scaled = s.scale.asDiagonal() * info * s.scale.asDiagonal();
  s.llt.compute(scaled);
  s.ok = s.llt.info() == Eigen::Success;
  return s;
}

Eigen::VectorXd solve(const Solver& s, const Eigen::VectorXd& g) {
  return s.scale.asDiagonal() * s.llt.solve(s.scale.asDiagonal() * g);
}

void check_rank(const Eigen::MatrixXd& info) {
  const Eigen::VectorXd s = diag_scale(info);
  const Eigen::MatrixXd scaled = s.asDiagonal() * info * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (!(top > 0.0) || ev.minCoeff() < kRankTol * top) {
    throw Error(ErrorKind::SingularInformation,
                "information matrix is singular (scaled eigenvalue ratio " +
                    std::to_string(top > 0.0 ? ev.minCoeff() / top : 0.0) + "); check for collinear covariates");
  }
}

// Information used for the Newton step and its factorization.
Solver step_solver(const PanelModel::Derivatives& d, const ParamLayout& layout) {
  Solver s = factor(-d.hessian);
  if (s.ok) return s;
  const Eigen::MatrixXd f = clamped_fisher(d.fisher, layout);
  s = factor(f);
  if (s.ok) return s;
  const auto n = f.rows();
  s = factor(f + kRidge * Eigen::MatrixXd::Identity(n, n));
  if (s.ok) return s;
  throw Error(ErrorKind::SingularInformation, "information matrix is not positive definite after ridge");
}

class Objective {
 public:
  Objective(const PanelModel& model, const ParamLayout& layout, Params base)
      : model_(model), layout_(layout), base_(std::move(base)) {}

  Params params(const Eigen::VectorXd& theta) const { return layout_.unpack(theta, base_); }

  double value(const Eigen::VectorXd& theta) const {
    const Params p = params(theta);
    const auto ll = model_.loglik(p);
    return ll.value + penalty(p, layout_);
  }

  PanelModel::Derivatives derivatives(const Eigen::VectorXd& theta, bool second_order) const {
    const Params p = params(theta);
    auto d = model_.derivatives(p, layout_, second_order);
    d.loglik += penalty(p, layout_);
    add_penalty(p, layout_, d, second_order);
    return d;
  }

 private:
  const PanelModel& model_;
  const ParamLayout& layout_;
  Params base_;
};

// The rank check guards against collinear designs at the starting point.
// Later passes of a fit skip it: a component driven to zero leaves directions
// without information that the ridge fallback handles.
InnerResult run_inner(const PanelModel& model, const ParamLayout& layout, const Params& start,
                      const FitOptions& options, bool rank_check = true) {
  check_variances(start, layout, options.sigma2_floor);
  const Objective obj(model, layout, start);
  Eigen::VectorXd theta = layout.pack(start);
  if (!theta.allFinite()) throw Error(ErrorKind::NonFiniteInput, "starting parameters are not finite");

  InnerResult res;
  auto d = obj.derivatives(theta, true);
  if (rank_check) check_rank(clamped_fisher(d.fisher, layout));
  double f = d.loglik;
  res.trace.push_back(f);

  for (int it = 0;; ++it) {
    if (!d.gradient.allFinite()) throw Error(ErrorKind::NonFiniteGradient, "gradient is not finite during fitting");
    res.gradient_max_norm = d.gradient.cwiseAbs().maxCoeff();
    if (res.gradient_max_norm < options.tol_params) {
      res.converged = true;
      break;
    }
    if (it >= options.max_inner_iters) break;
    const Solver s = step_solver(d, layout);
    const Eigen::VectorXd step = solve(s, d.gradient);
    if (!step.allFinite()) throw Error(ErrorKind::NonFiniteStep, "Newton step is not finite");

    // Near the optimum the objective cannot resolve the remaining gain; a
    // step within roundoff of f is then taken if it shrinks the gradient.
    const double noise = kRoundoff * (1.0 + std::abs(f));
    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd next;
    double fn = 0.0;
    std::optional<PanelModel::Derivatives> dn;
    for (int h = 0; h <= kMaxHalvings; ++h, alpha *= 0.5) {
      next = theta + alpha * step;
      fn = obj.value(next);
      if (!std::isfinite(fn)) continue;
      if (fn >= f) {
        accepted = true;
        break;
      }
      if (f - fn <= noise) {
        auto trial = obj.derivatives(next, true);
        if (trial.gradient.allFinite() && trial.gradient.cwiseAbs().maxCoeff() < res.gradient_max_norm) {
          dn = std::move(trial);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) break;
    theta = next;
    f = fn;
    res.trace.push_back(f);
    ++res.iterations;
    d = dn ? std::move(*dn) : obj.derivatives(theta, true);
  }
  res.params = obj.params(theta);
  res.penalized_loglik = f;
  return res;
}

// Expected information of the mean parameters (log psi removed) including
// the random-effect precision.
struct MeanInformation {
  Eigen::MatrixXd f;                 // without penalty
  std::array<Eigen::Index, 3> off{};  // b block offsets in f, -1 if inactive
};

MeanInformation mean_information(const PanelModel& model, const ParamLayout& layout, const Params& p) {
  const auto d = model.derivatives(p, layout, true);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(layout.size()); ++i) {
    const auto lp = layout.log_psi_offset();
    if (lp >= 0 && i >= lp && i < lp + static_cast<Eigen::Index>(layout.num_log_psi())) continue;
    keep.push_back(i);
  }
  MeanInformation m;
  const auto n = static_cast<Eigen::Index>(keep.size());
  m.f.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m.f(i, j) = d.fisher(keep[i], keep[j]);
  }
  for (std::size_t c = 0; c < 3; ++c) {
    m.off[c] = -1;
    const auto o = layout.b_offset(static_cast<Component>(c));
    if (o < 0) continue;
    m.off[c] = static_cast<Eigen::Index>(std::find(keep.begin(), keep.end(), o) - keep.begin());
  }
  return m;
}

// Slope of the Laplace marginal in tau_c = log sigma2_c. The deviations
// follow sigma2 through the Fisher quadratic around the current estimate:
// (F + P') d = (P - P') theta.
double marginal_slope(const MeanInformation& m, const std::array<double, 3>& current,
                      const std::array<double, 3>& sigma2, const std::array<Eigen::VectorXd, 3>& b, std::size_t c,
                      Eigen::Index R) {
  Eigen::MatrixXd a = m.f;
  const auto n = a.rows();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < 3; ++k) {
    if (m.off[k] < 0) continue;
    a.diagonal().segment(m.off[k], R).array() += 1.0 / sigma2[k];
    rhs.segment(m.off[k], R) = (1.0 / current[k] - 1.0 / sigma2[k]) * b[k];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    llt.compute(a + kRidge * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::SingularInformation, "penalized information is not positive definite");
    }
  }
  const Eigen::VectorXd bc = b[c] + llt.solve(rhs).segment(m.off[c], R);
  Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(n, R);
  for (Eigen::Index r = 0; r < R; ++r) unit(m.off[c] + r, r) = 1.0;
  const double tr = llt.solve(unit).middleRows(m.off[c], R).trace();
  return 0.5 * ((bc.squaredNorm() + tr) / sigma2[c] - static_cast<double>(R));
}

VarianceUpdate run_variance_update(const PanelModel& model, const ParamLayout& layout, const Params& p,
                                   const FitOptions& options) {
  VarianceUpdate out;
  out.sigma2 = p.sigma2;
  const MeanInformation m = mean_information(model, layout, p);
  const auto R = static_cast<Eigen::Index>(layout.num_regions());
  const std::array<Eigen::VectorXd, 3> b{p.b_lambda, p.b_phi, p.b_nu};
  const double lo = std::log(options.sigma2_floor);
  const double hi = std::log(kSigma2Max);
  for (std::size_t c = 0; c < 3; ++c) {
    if (m.off[c] < 0) continue;
    auto s2 = out.sigma2;
    auto slope_at = [&](double tau) {
      s2[c] = std::exp(tau);
      return marginal_slope(m, p.sigma2, s2, b, c, R);
    };
    const double g_lo = slope_at(lo);
    if (g_lo <= 0.0) {
      out.sigma2[c] = options.sigma2_floor;
      out.at_floor[c] = true;
      continue;
    }
    const double g_hi = slope_at(hi);
    if (g_hi >= 0.0) {
      out.sigma2[c] = kSigma2Max;
      continue;
    }
    std::uintmax_t max_iter = 200;
    const auto root = boost::math::tools::toms748_solve(slope_at, lo, hi, g_lo, g_hi,
                                                        boost::math::tools::eps_tolerance<double>(45), max_iter);
    out.sigma2[c] = std::exp(0.5 * (root.first + root.second));
  }
  return out;
}

double max_change(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

Eigen::VectorXd full_vector(const Params& p, const ParamLayout& layout) {
  Eigen::VectorXd th = layout.pack(p);
  Eigen::VectorXd out(th.size() + 3);
  out << th, p.sigma2[0], p.sigma2[1], p.sigma2[2];
  return out;
}

// Poisson GLM for the endemic part alone, used as a warm start.
Params warm_start(const ModelSpec& spec, const CountPanel& panel, const RegionCovariates& cov,
                  const FitOptions& options) {
  const std::size_t R = panel.num_regions();
  Params p = Params::zeros(R, spec);
  const auto& y = panel.counts();
  const auto n = y.cols() - 1;
  const double total = static_cast<double>(y.rightCols(n).sum());
  const double ymean = std::max(total / static_cast<double>(R * static_cast<std::size_t>(n)), 0.5);

  if (spec.nu.enabled) {
    ModelSpec es;
    es.lambda.enabled = false;
    es.phi.enabled = false;
    es.nu = spec.nu;
    es.nu.random_intercept = false;
    es.overdispersion = Overdispersion::None;
    es.time_offset = spec.time_offset;
    Params e = Params::zeros(R, es);
    e.alpha_nu = std::log(std::max(total, 1.0) / static_cast<double>(n));
    FitOptions eo = options;
    eo.max_inner_iters = std::max(options.max_inner_iters, 100);
    try {
      const PanelModel em(es, panel, cov);
      const ParamLayout el(es, R);
      e = run_inner(em, el, e, eo).params;
    } catch (const Error&) {
      // keep the crude intercept
    }
    p.alpha_nu = e.alpha_nu;
    p.beta_nu_t = e.beta_nu_t;
    p.beta_nu_t2 = e.beta_nu_t2;
    p.beta_nu_age = e.beta_nu_age;
    if (spec.lambda.enabled || spec.phi.enabled) p.alpha_nu += std::log(0.5);
  }
  if (spec.lambda.enabled) p.alpha_lambda = std::log(0.5);
  if (spec.phi.enabled) {
    ModelSpec s = spec;
    s.lambda.enabled = false;
    s.nu.enabled = false;
    s.phi.random_intercept = false;
    s.phi.log_pop_share = false;
    const double smean = mean(Params::zeros(R, s), s, panel, cov).between.mean();
    p.alpha_phi = smean > 0.0 ? std::log(0.1 * ymean / smean) : 0.0;
  }
  if (spec.overdispersion != Overdispersion::None) {
    ModelSpec ps = spec;
    ps.overdispersion = Overdispersion::None;
    Params zp = p;
    zp.psi.resize(0);
    const auto cm = mean(zp, ps, panel, cov);
    double num = 0.0, den = 0.0;
    for (Eigen::Index r = 0; r < cm.total.rows(); ++r) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double mu = cm.total(r, j);
        if (!(mu > 0.0) || !std::isfinite(mu)) continue;
        const double resid = static_cast<double>(y(r, j + 1)) - mu;
        num += resid * resid - mu;
        den += mu * mu;
      }
    }
    const double psi0 = std::clamp(den > 0.0 ? num / den : 0.1, 0.01, 10.0);
    p.psi.setConstant(psi0);
  }
  return p;
}

NamedVector standard_errors(const PanelModel& model, const ParamLayout& layout, const Params& p) {
  const Objective obj(model, layout, p);
  const auto d = obj.derivatives(layout.pack(p), true);
  Eigen::MatrixXd info = -d.hessian;
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) {
    info = clamped_fisher(d.fisher, layout);
    llt.compute(info);
  }
  NamedVector se;
  const auto nf = static_cast<Eigen::Index>(layout.num_fixed());
  se.names.assign(layout.names().begin(), layout.names().begin() + nf);
  se.values = Eigen::VectorXd::Constant(nf, std::numeric_limits<double>::quiet_NaN());
  if (llt.info() != Eigen::Success) return se;
  const auto n = info.rows();
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  for (Eigen::Index i = 0; i < nf; ++i) se.values[i] = std::sqrt(std::max(inv(i, i), 0.0));
  return se;
}

double marginal_approx(const PanelModel& model, const ParamLayout& layout, const Params& p, double pen) {
  const MeanInformation m = mean_information(model, layout, p);
  if (m.f.rows() == 0) return pen;
  Eigen::MatrixXd a = m.f;
  const auto R = static_cast<Eigen::Index>(layout.num_regions());
  for (std::size_t c = 0; c < 3; ++c) {
    if (m.off[c] >= 0) a.diagonal().segment(m.off[c], R).array() += 1.0 / p.sigma2[c];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return pen - 0.5 * logdet;
}

void prepare(Params& p, const ModelSpec& spec, std::size_t R) {
  const Params z = Params::zeros(R, spec);
  for (std::size_t c = 0; c < 3; ++c) {
    auto& b = p.b(static_cast<Component>(c));
    if (static_cast<std::size_t>(b.size()) != R) b = z.b(static_cast<Component>(c));
  }
  if (p.psi.size() != z.psi.size()) {
    const double v = p.psi.size() > 0 ? p.psi[0] : 1.0;
    p.psi = Eigen::VectorXd::Constant(z.psi.size(), v);
  }
}

}  // namespace

const char* to_string(Init init) { return init == Init::Zeros ? "zeros" : "endemic_glm_warmstart"; }

Init init_from_string(const std::string& s) {
  if (s == "zeros") return Init::Zeros;
  if (s == "endemic_glm_warmstart") return Init::EndemicGlmWarmstart;
  throw Error(ErrorKind::InvalidInput, "unknown init '" + s + "' (expected zeros|endemic_glm_warmstart)");
}

void FitOptions::validate() const {
  if (max_outer_iters < 1 || max_inner_iters < 1) {
    throw Error(ErrorKind::InvalidInput, "iteration limits must be positive");
  }
  if (!(tol_params > 0.0) || !(tol_loglik > 0.0)) throw Error(ErrorKind::InvalidInput, "tolerances must be positive");
  if (!(sigma2_floor > 0.0) || sigma2_floor >= kSigma2Max) {
    throw Error(ErrorKind::InvalidInput, "sigma2_floor must be in (0, 1e4)");
  }
}

double penalized_loglik(const Params& p, const ModelSpec& spec, const CountPanel& panel, const RegionCovariates& cov,
                        double sigma2_floor) {
  const PanelModel model(spec, panel, cov);
  const ParamLayout layout(spec, panel.num_regions());
  check_variances(p, layout, sigma2_floor);
  return model.loglik(p).value + penalty(p, layout);
}

InnerResult inner_maximize(const Params& start, const ModelSpec& spec, const CountPanel& panel,
                           const RegionCovariates& cov, const FitOptions& options, std::array<bool, 3> frozen) {
  options.validate();
  const PanelModel model(spec, panel, cov);
  const ParamLayout layout(spec, panel.num_regions(), frozen);
  Params p = start;
  prepare(p, spec, panel.num_regions());
  return run_inner(model, layout, p, options);
}

VarianceUpdate update_variances(const Params& p, const ModelSpec& spec, const CountPanel& panel,
                                const RegionCovariates& cov, const FitOptions& options, std::array<bool, 3> frozen) {
  options.validate();
  const PanelModel model(spec, panel, cov);
  const ParamLayout layout(spec, panel.num_regions(), frozen);
  return run_variance_update(model, layout, p, options);
}

FitResult fit(const ModelSpec& spec, const CountPanel& panel, const RegionCovariates& cov,
              const FitOptions& options) {
  options.validate();
  if (panel.num_days() < 3) throw Error(ErrorKind::InvalidInput, "fitting needs at least three days of counts");
  const std::size_t R = panel.num_regions();
  const PanelModel model(spec, panel, cov);

  Params p;
  if (options.start) {
    p = *options.start;
  } else if (options.init == Init::Zeros) {
    p = Params::zeros(R, spec);
  } else {
    p = warm_start(spec, panel, cov, options);
  }
  prepare(p, spec, R);
  if (!options.start) p.sigma2 = {1.0, 1.0, 1.0};

  FitResult res;
  res.spec = spec;
  for (std::size_t r = 0; r < R; ++r) res.region_ids.push_back(panel.regions()[r].id);

  std::array<bool, 3> frozen{false, false, false};
  bool any_random = false;
  for (std::size_t c = 0; c < 3; ++c) any_random = any_random || spec.random(static_cast<Component>(c));

  InnerResult inner;
  if (!any_random) {
    const ParamLayout layout(spec, R);
    inner = run_inner(model, layout, p, options);
    res.n_outer_iters = 1;
    res.n_inner_iters = inner.iterations;
    res.converged = inner.converged;
  } else {
    Eigen::VectorXd prev_vec;
    double prev_pen = std::numeric_limits<double>::quiet_NaN();
    for (int outer = 1; outer <= options.max_outer_iters; ++outer) {
      const ParamLayout layout(spec, R, frozen);
      inner = run_inner(model, layout, p, options, outer == 1);
      res.n_inner_iters += inner.iterations;
      p = inner.params;
      const auto vu = run_variance_update(model, layout, p, options);
      p.sigma2 = vu.sigma2;
      for (std::size_t c = 0; c < 3; ++c) {
        if (!vu.at_floor[c]) continue;
        frozen[c] = true;
        res.boundary[c] = true;
        p.b(static_cast<Component>(c)).setZero();
        p.sigma2[c] = options.sigma2_floor;
      }
      res.n_outer_iters = outer;
      const ParamLayout full(spec, R);
      const Eigen::VectorXd vec = full_vector(p, full);
      const double dpar = max_change(vec, prev_vec);
      const double dll = std::abs(inner.penalized_loglik - prev_pen) / std::max(std::abs(prev_pen), 1e-300);
      if (options.log) {
        *options.log << "outer " << outer << ": penalized loglik " << inner.penalized_loglik << ", inner iterations "
                     << inner.iterations << ", sigma2 (" << p.sigma2[0] << ", " << p.sigma2[1] << ", " << p.sigma2[2]
                     << "), max change " << dpar << "\n";
      }
      prev_vec = vec;
      prev_pen = inner.penalized_loglik;
      if (dpar < options.tol_params && dll < options.tol_loglik) {
        res.converged = true;
        break;
      }
    }
    const ParamLayout layout(spec, R, frozen);
    inner = run_inner(model, layout, p, options, false);
    res.n_inner_iters += inner.iterations;
    res.converged = res.converged && inner.converged;
  }

  const ParamLayout layout(spec, R, frozen);
  res.params = inner.params;
  res.penalized_loglik = inner.penalized_loglik;
  res.gradient_max_norm = inner.gradient_max_norm;
  res.loglik = model.loglik(res.params).value;
  res.se = standard_errors(model, layout, res.params);
  res.marginal_loglik_approx = marginal_approx(model, layout, res.params, res.penalized_loglik);
  res.aic_like = any_random ? std::numeric_limits<double>::quiet_NaN()
                            : -2.0 * res.loglik + 2.0 * static_cast<double>(layout.size());
  if (options.log) {
    *options.log << "fit " << (res.converged ? "converged" : "did not converge") << " after " << res.n_outer_iters
                 << " outer iterations; gradient max-norm " << res.gradient_max_norm << "\n";
  }
  return res;
}

}  // namespace arealepi
