#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arealepi/graph.hpp"

namespace arealepi {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Calendar day. Parsed from and formatted to ISO-8601 (YYYY-MM-DD).
struct Date {
  std::chrono::sys_days day{};

  static Date parse(const std::string& iso);
  std::string iso() const;
  Date next() const { return Date{day + std::chrono::days{1}}; }

  auto operator<=>(const Date&) const = default;
};

/// Region x day matrix of daily new infections on consecutive days.
class CountPanel {
 public:
  CountPanel() = default;
  /// Validates shape, non-negativity, consecutive days and T >= min_days.
  CountPanel(RegionSet regions, std::vector<Date> days, CountMatrix counts, std::size_t min_days = 2);

  const RegionSet& regions() const { return regions_; }
  const std::vector<Date>& days() const { return days_; }
  const CountMatrix& counts() const { return counts_; }
  std::size_t num_regions() const { return regions_.size(); }
  std::size_t num_days() const { return days_.size(); }
  std::int64_t operator()(std::size_t r, std::size_t t) const { return counts_(r, t); }

  /// Panel restricted to the first `days` days.
  CountPanel head(std::size_t days) const;

  bool operator==(const CountPanel& other) const {
    return regions_ == other.regions_ && days_ == other.days_ && counts_ == other.counts_;
  }

 private:
  RegionSet regions_;
  std::vector<Date> days_;
  CountMatrix counts_;
};

/// Per-region population share e_r and proportion over 65 a_r.
struct RegionCovariates {
  Eigen::VectorXd pop_share;
  Eigen::VectorXd over65;

  std::size_t size() const { return static_cast<std::size_t>(pop_share.size()); }
  /// Throws InvalidInput unless e_r > 0, sum(e) = 1 within 1e-9, 0 < a_r < 1.
  void validate() const;
};

/// Q_{r,t} = Y_{r,t} / e_r.
struct IncidencePanel {
  RowMatrix values;
};

struct IngestOptions {
  /// Replace negative counts by zero instead of failing; each change is
  /// reported on `log` when it is set.
  bool clip_negatives_to_zero = false;
  std::ostream* log = nullptr;
  std::size_t min_days = 2;
};

/// Reads a `date,region_id,count` CSV into a dense panel ordered by `regions`.
/// Throws NegativeCount, UnknownRegion, MissingCell, NonConsecutiveDates.
CountPanel ingest_counts(std::istream& in, const RegionSet& regions, const IngestOptions& options = {});

/// Writes the panel in the ingestion format (rows by day, then region order).
void write_counts(std::ostream& out, const CountPanel& panel);

struct CovariateTable {
  RegionSet regions;
  RegionCovariates covariates;
};

/// Reads `region_id,pop_share,over65` with an optional trailing `name`
/// column. File order defines the region order.
CovariateTable read_covariates(std::istream& in);
void write_covariates(std::ostream& out, const RegionSet& regions, const RegionCovariates& cov);

IncidencePanel incidence(const CountPanel& panel, const RegionCovariates& cov);

std::vector<std::int64_t> aggregate_national(const CountPanel& panel);

}  // namespace arealepi
