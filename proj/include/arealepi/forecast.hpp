#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arealepi/data.hpp"
#include "arealepi/estimation.hpp"
#include "arealepi/model.hpp"

namespace arealepi {

struct Forecast {
  Date horizon_date;
  std::vector<std::string> region_ids;
  Eigen::VectorXd mu_hat;
  std::vector<std::int64_t> lo;
  std::vector<std::int64_t> hi;
  double level = 0.8;
  DayMeans components;

  double total() const { return mu_hat.sum(); }
};

/// Plug-in forecast for the day after the panel's last day.
Forecast one_step_ahead(const Params& params, const ModelSpec& spec, const CountPanel& panel,
                        const RegionCovariates& cov, double level = 0.8);
/// Throws InvalidInput for an unconverged fit unless `allow_unconverged`.
Forecast one_step_ahead(const FitResult& fit, const CountPanel& panel, const RegionCovariates& cov,
                        double level = 0.8, bool allow_unconverged = false);

struct Decomposition {
  std::vector<std::string> region_ids;
  /// R x 3 (within, between, endemic), per-day proportions averaged with
  /// equal day weights.
  RowMatrix proportions;
  /// Per-day proportions for days 2..T, one R x (T-1) matrix per component.
  std::optional<std::array<RowMatrix, 3>> per_day;
};

/// Days with a zero fitted total are left out of the average. Throws
/// InvalidInput when a region has no day with a positive total.
Decomposition decompose(const Params& params, const ModelSpec& spec, const CountPanel& panel,
                        const RegionCovariates& cov, bool keep_per_day = false);
Decomposition decompose(const FitResult& fit, const CountPanel& panel, const RegionCovariates& cov,
                        bool keep_per_day = false);

struct SimulateOptions {
  std::size_t days = 2;
  Date start = Date::parse("2020-01-01");
  std::uint64_t seed = 1;
  /// ExplosionGuard when any mean exceeds this.
  double mu_cap = 1e9;
};

/// Draws days 2..T from the model given day-1 counts `y0`. Draw order is day
/// by day, regions in order, so a panel is a pure function of the seed.
CountPanel simulate(const Params& params, const ModelSpec& spec, const RegionSet& regions,
                    const RegionCovariates& cov, const std::vector<std::int64_t>& y0,
                    const SimulateOptions& options);

/// Seed of replicate `rep` derived from a master seed.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t rep);

struct CoverageOptions {
  /// Training days; every replicate simulates one more for the held-out day.
  std::size_t days = 40;
  std::size_t replicates = 500;
  double level = 0.8;
  std::uint64_t seed = 1;
  double mu_cap = 1e9;
  /// Day-1 counts; empty uses the rounded endemic mean of day 1 (at least 1).
  std::vector<std::int64_t> y0;
  bool refit = false;
  FitOptions fit_options;
};

struct CoverageReport {
  Eigen::VectorXd per_region;
  double pooled = 0.0;
  std::size_t replicates = 0;
  /// Refits that threw; those replicates are excluded.
  std::size_t failed_fits = 0;
};

CoverageReport interval_coverage(const ModelSpec& spec, const Params& params, const RegionSet& regions,
                                 const RegionCovariates& cov, const CoverageOptions& options);

}  // namespace arealepi
