#include "arealepi/data.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>

#include "arealepi/csv.hpp"
#include "arealepi/error.hpp"

namespace arealepi {

Date Date::parse(const std::string& iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (iso.size() != 10 || std::sscanf(iso.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw Error(ErrorKind::InvalidInput, "not an ISO-8601 date: '" + iso + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw Error(ErrorKind::InvalidInput, "invalid calendar date: '" + iso + "'");
  return Date{std::chrono::sys_days{ymd}};
}

std::string Date::iso() const {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

CountPanel::CountPanel(RegionSet regions, std::vector<Date> days, CountMatrix counts, std::size_t min_days)
    : regions_(std::move(regions)), days_(std::move(days)), counts_(std::move(counts)) {
  if (static_cast<std::size_t>(counts_.rows()) != regions_.size() ||
      static_cast<std::size_t>(counts_.cols()) != days_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "count matrix is " + std::to_string(counts_.rows()) + "x" +
                                                  std::to_string(counts_.cols()) + ", expected " +
                                                  std::to_string(regions_.size()) + "x" + std::to_string(days_.size()));
  }
  if (days_.size() < min_days) {
    throw Error(ErrorKind::InvalidInput,
                "panel has " + std::to_string(days_.size()) + " days, need at least " + std::to_string(min_days));
  }
  for (std::size_t t = 1; t < days_.size(); ++t) {
    if (days_[t].day != days_[t - 1].day + std::chrono::days{1}) {
      throw Error(ErrorKind::NonConsecutiveDates, days_[t - 1].iso() + " is followed by " + days_[t].iso());
    }
  }
  for (Eigen::Index r = 0; r < counts_.rows(); ++r) {
    for (Eigen::Index t = 0; t < counts_.cols(); ++t) {
      if (counts_(r, t) < 0) {
        throw Error(ErrorKind::NegativeCount, "region " + regions_[r].id + " on " + days_[t].iso() + " has count " +
                                                  std::to_string(counts_(r, t)));
      }
    }
  }
}

CountPanel CountPanel::head(std::size_t days) const {
  std::vector<Date> d(days_.begin(), days_.begin() + static_cast<std::ptrdiff_t>(days));
  return CountPanel(regions_, std::move(d), counts_.leftCols(static_cast<Eigen::Index>(days)), 1);
}

void RegionCovariates::validate() const {
  if (pop_share.size() != over65.size()) throw Error(ErrorKind::DimensionMismatch, "covariate vectors differ in length");
  double total = 0.0;
  for (Eigen::Index r = 0; r < pop_share.size(); ++r) {
    if (!(pop_share[r] > 0.0) || !std::isfinite(pop_share[r])) {
      throw Error(ErrorKind::InvalidInput, "pop_share of region #" + std::to_string(r) + " must be positive");
    }
    if (!(over65[r] > 0.0 && over65[r] < 1.0)) {
      throw Error(ErrorKind::InvalidInput, "over65 of region #" + std::to_string(r) + " must lie in (0,1)");
    }
    total += pop_share[r];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidInput, "pop_share sums to " + std::to_string(total) + ", expected 1");
  }
}

CountPanel ingest_counts(std::istream& in, const RegionSet& regions, const IngestOptions& options) {
  csv::Reader reader(in, {"date", "region_id", "count"});
  struct Cell {
    std::int64_t count;
    std::size_t line;
  };
  std::map<Date, std::vector<std::optional<Cell>>> by_day;
  csv::Row row;
  while (reader.next(row)) {
    const auto date = [&] {
      try {
        return Date::parse(row.fields[0]);
      } catch (const Error& e) {
        throw Error(ErrorKind::InvalidInput, "line " + std::to_string(row.line) + ": " + e.what());
      }
    }();
    const auto r = regions.find(row.fields[1]);
    if (!r) {
      throw Error(ErrorKind::UnknownRegion,
                  "line " + std::to_string(row.line) + ": region '" + row.fields[1] + "' is not in the region set");
    }
    auto count = csv::parse_int(row.fields[2], row.line, "count");
    if (count < 0) {
      if (!options.clip_negatives_to_zero) {
        throw Error(ErrorKind::NegativeCount, "line " + std::to_string(row.line) + ": region " + row.fields[1] +
                                                  " on " + row.fields[0] + " has count " + row.fields[2]);
      }
      if (options.log) {
        *options.log << "clipped negative count " << count << " to 0 for region " << row.fields[1] << " on "
                     << row.fields[0] << " (line " << row.line << ")\n";
      }
      count = 0;
    }
    auto& cells = by_day[date];
    cells.resize(regions.size());
    if (cells[*r]) {
      throw Error(ErrorKind::InvalidInput, "line " + std::to_string(row.line) + ": duplicate entry for region " +
                                               row.fields[1] + " on " + row.fields[0] + " (first at line " +
                                               std::to_string(cells[*r]->line) + ")");
    }
    cells[*r] = Cell{count, row.line};
  }

  std::vector<Date> days;
  days.reserve(by_day.size());
  for (const auto& [d, cells] : by_day) {
    if (!days.empty() && d.day != days.back().day + std::chrono::days{1}) {
      throw Error(ErrorKind::NonConsecutiveDates, days.back().iso() + " is followed by " + d.iso());
    }
    days.push_back(d);
  }
  CountMatrix counts(static_cast<Eigen::Index>(regions.size()), static_cast<Eigen::Index>(days.size()));
  std::size_t t = 0;
  for (const auto& [d, cells] : by_day) {
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (!cells[r]) throw Error(ErrorKind::MissingCell, "no count for region " + regions[r].id + " on " + d.iso());
      counts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = cells[r]->count;
    }
    ++t;
  }
  return CountPanel(regions, std::move(days), std::move(counts), options.min_days);
}

void write_counts(std::ostream& out, const CountPanel& panel) {
  out << "date,region_id,count\n";
  for (std::size_t t = 0; t < panel.num_days(); ++t) {
    const auto iso = panel.days()[t].iso();
    for (std::size_t r = 0; r < panel.num_regions(); ++r) {
      out << iso << ',' << panel.regions()[r].id << ',' << panel(r, t) << '\n';
    }
  }
}

CovariateTable read_covariates(std::istream& in) {
  csv::Reader reader(in, {"region_id", "pop_share", "over65"});
  const int name_col = reader.column("name");
  std::vector<Region> regions;
  std::vector<double> e, a;
  csv::Row row;
  while (reader.next(row)) {
    Region reg{row.fields[0], name_col >= 0 ? row.fields[static_cast<std::size_t>(name_col)] : std::string{}};
    regions.push_back(std::move(reg));
    e.push_back(csv::parse_double(row.fields[1], row.line, "pop_share"));
    a.push_back(csv::parse_double(row.fields[2], row.line, "over65"));
  }
  CovariateTable table{RegionSet(std::move(regions)), {}};
  table.covariates.pop_share = Eigen::Map<Eigen::VectorXd>(e.data(), static_cast<Eigen::Index>(e.size()));
  table.covariates.over65 = Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  table.covariates.validate();
  return table;
}

void write_covariates(std::ostream& out, const RegionSet& regions, const RegionCovariates& cov) {
  out << "region_id,pop_share,over65,name\n";
  char buf[64];
  for (std::size_t r = 0; r < regions.size(); ++r) {
    out << regions[r].id;
    std::snprintf(buf, sizeof buf, ",%.17g", cov.pop_share[static_cast<Eigen::Index>(r)]);
    out << buf;
    std::snprintf(buf, sizeof buf, ",%.17g", cov.over65[static_cast<Eigen::Index>(r)]);
    out << buf << ',' << regions[r].name << '\n';
  }
}

IncidencePanel incidence(const CountPanel& panel, const RegionCovariates& cov) {
  if (cov.size() != panel.num_regions()) {
    throw Error(ErrorKind::DimensionMismatch, "covariates and panel have different region counts");
  }
  IncidencePanel q;
  q.values = panel.counts().cast<double>();
  for (Eigen::Index r = 0; r < q.values.rows(); ++r) q.values.row(r) /= cov.pop_share[r];
  return q;
}

std::vector<std::int64_t> aggregate_national(const CountPanel& panel) {
  std::vector<std::int64_t> total(panel.num_days(), 0);
  for (std::size_t r = 0; r < panel.num_regions(); ++r) {
    for (std::size_t t = 0; t < panel.num_days(); ++t) total[t] += panel(r, t);
  }
  return total;
}

}  // namespace arealepi
