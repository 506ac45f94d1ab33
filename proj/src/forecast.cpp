#include "arealepi/forecast.hpp"

#include <cmath>
#include <random>

#include "arealepi/error.hpp"
#include "arealepi/negbin.hpp"

namespace arealepi {

namespace {

std::vector<std::string> ids_of(const RegionSet& regions) {
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < regions.size(); ++r) ids.push_back(regions[r].id);
  return ids;
}

void check_level(double level) {
  if (!(level > 0.0 && level <= 1.0)) throw Error(ErrorKind::InvalidInput, "interval level must be in (0, 1]");
}

}  // namespace

Forecast one_step_ahead(const Params& params, const ModelSpec& spec, const CountPanel& panel,
                        const RegionCovariates& cov, double level) {
  check_level(level);
  const PanelModel model(spec, panel, cov);
  Forecast f;
  f.level = level;
  f.horizon_date = panel.days().back().next();
  f.region_ids = ids_of(panel.regions());
  f.components = model.next_day(params);
  f.mu_hat = f.components.total;
  const auto R = panel.num_regions();
  for (std::size_t r = 0; r < R; ++r) {
    const double mu = f.mu_hat[static_cast<Eigen::Index>(r)];
    if (!std::isfinite(mu) || !(mu > 0.0)) {
      throw Error(ErrorKind::NonFiniteInput, "forecast mean for region " + f.region_ids[r] + " is " +
                                                 std::to_string(mu));
    }
    const double psi = spec.overdispersion == Overdispersion::None ? 0.0 : params.psi_of(r);
    const auto [lo, hi] = nb_interval(level, mu, psi);
    f.lo.push_back(lo);
    f.hi.push_back(hi);
  }
  return f;
}

Forecast one_step_ahead(const FitResult& fit, const CountPanel& panel, const RegionCovariates& cov, double level,
                        bool allow_unconverged) {
  if (!fit.converged && !allow_unconverged) {
    throw Error(ErrorKind::InvalidInput, "fit did not converge; pass the override to forecast anyway");
  }
  return one_step_ahead(fit.params, fit.spec, panel, cov, level);
}

Decomposition decompose(const Params& params, const ModelSpec& spec, const CountPanel& panel,
                        const RegionCovariates& cov, bool keep_per_day) {
  const PanelModel model(spec, panel, cov);
  const ComponentMeans m = model.mean(params);
  const auto R = m.total.rows();
  const auto n = m.total.cols();
  Decomposition d;
  d.region_ids = ids_of(panel.regions());
  d.proportions = RowMatrix::Zero(R, 3);
  std::array<RowMatrix, 3> per{RowMatrix(R, n), RowMatrix(R, n), RowMatrix(R, n)};
  const std::array<const RowMatrix*, 3> parts{&m.within, &m.between, &m.endemic};
  for (Eigen::Index r = 0; r < R; ++r) {
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    Eigen::Index used = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double total = m.total(r, j);
      const bool ok = std::isfinite(total) && total > 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = ok ? (*parts[c])(r, j) / total : std::numeric_limits<double>::quiet_NaN();
        per[c](r, j) = v;
        if (ok) acc[c] += v;
      }
      if (ok) ++used;
    }
    if (used == 0) {
      throw Error(ErrorKind::InvalidInput, "region " + d.region_ids[static_cast<std::size_t>(r)] +
                                               " has no day with a positive fitted mean");
    }
    for (std::size_t c = 0; c < 3; ++c) d.proportions(r, static_cast<Eigen::Index>(c)) = acc[c] / static_cast<double>(used);
  }
  if (keep_per_day) d.per_day = std::move(per);
  return d;
}

Decomposition decompose(const FitResult& fit, const CountPanel& panel, const RegionCovariates& cov,
                        bool keep_per_day) {
  return decompose(fit.params, fit.spec, panel, cov, keep_per_day);
}

CountPanel simulate(const Params& params, const ModelSpec& spec, const RegionSet& regions,
                    const RegionCovariates& cov, const std::vector<std::int64_t>& y0,
                    const SimulateOptions& options) {
  const std::size_t R = regions.size();
  if (cov.size() != R || y0.size() != R) {
    throw Error(ErrorKind::DimensionMismatch, "simulate needs covariates and initial counts for every region");
  }
  if (options.days < 2) throw Error(ErrorKind::InvalidInput, "simulate needs at least two days");
  spec.validate(R);
  const auto Ri = static_cast<Eigen::Index>(R);
  const auto T = static_cast<Eigen::Index>(options.days);

  CountMatrix y(Ri, T);
  for (std::size_t r = 0; r < R; ++r) {
    if (y0[r] < 0) throw Error(ErrorKind::NegativeCount, "initial count of region " + regions[r].id + " is negative");
    y(static_cast<Eigen::Index>(r), 0) = y0[r];
  }
  std::vector<Date> days{options.start};
  for (Eigen::Index t = 1; t < T; ++t) days.push_back(days.back().next());

  std::mt19937_64 rng(options.seed);
  Eigen::VectorXd q(Ri), s(Ri);
  for (Eigen::Index t = 1; t < T; ++t) {
    const Predictors pr = predictors(params, spec, cov, static_cast<int>(t + 1));
    for (Eigen::Index r = 0; r < Ri; ++r) {
      const double prev = static_cast<double>(y(r, t - 1));
      q[r] = spec.between_uses_counts ? prev : prev / cov.pop_share[r];
    }
    s.setZero();
    if (spec.phi.enabled) s = spec.weights->entries * q;
    for (Eigen::Index r = 0; r < Ri; ++r) {
      const auto ru = static_cast<std::size_t>(r);
      double mu = pr.lambda[r] * static_cast<double>(y(r, t - 1));
      mu += pr.phi[r] * s[r];
      mu += cov.pop_share[r] * pr.nu[r];
      if (!std::isfinite(mu) || mu > options.mu_cap) {
        throw Error(ErrorKind::ExplosionGuard, "mean " + std::to_string(mu) + " exceeds the cap in region " +
                                                   regions[ru].id + " on day " + days[static_cast<std::size_t>(t)].iso());
      }
      const double psi = spec.overdispersion == Overdispersion::None ? 0.0 : params.psi_of(ru);
      y(r, t) = nb_sample(rng, mu, psi);
    }
  }
  return CountPanel(regions, std::move(days), std::move(y));
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

CoverageReport interval_coverage(const ModelSpec& spec, const Params& params, const RegionSet& regions,
                                 const RegionCovariates& cov, const CoverageOptions& options) {
  check_level(options.level);
  if (options.replicates == 0) throw Error(ErrorKind::InvalidInput, "coverage needs at least one replicate");
  if (options.days < 3 && options.refit) throw Error(ErrorKind::InvalidInput, "refitting needs at least three days");
  const std::size_t R = regions.size();
  std::vector<std::int64_t> y0 = options.y0;
  if (y0.empty()) {
    const Predictors pr = predictors(params, spec, cov, 1);
    for (std::size_t r = 0; r < R; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      y0.push_back(std::max<std::int64_t>(1, std::llround(cov.pop_share[ri] * pr.nu[ri])));
    }
  }
  SimulateOptions so;
  so.days = options.days + 1;
  so.mu_cap = options.mu_cap;

  CoverageReport rep;
  Eigen::VectorXd hits = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(R));
  for (std::size_t k = 0; k < options.replicates; ++k) {
    so.seed = replicate_seed(options.seed, k);
    const CountPanel full = simulate(params, spec, regions, cov, y0, so);
    const CountPanel train = full.head(options.days);
    Params use = params;
    if (options.refit) {
      try {
        use = fit(spec, train, cov, options.fit_options).params;
      } catch (const Error&) {
        ++rep.failed_fits;
        continue;
      }
    }
    const Forecast f = one_step_ahead(use, spec, train, cov, options.level);
    for (std::size_t r = 0; r < R; ++r) {
      const auto obs = full(r, options.days);
      if (obs >= f.lo[r] && obs <= f.hi[r]) hits[static_cast<Eigen::Index>(r)] += 1.0;
    }
    ++rep.replicates;
  }
  if (rep.replicates == 0) throw Error(ErrorKind::InvalidInput, "every coverage replicate failed to fit");
  rep.per_region = hits / static_cast<double>(rep.replicates);
  rep.pooled = hits.sum() / static_cast<double>(rep.replicates * R);
  return rep;
}

}  // namespace arealepi
