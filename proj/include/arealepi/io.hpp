#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "arealepi/data.hpp"
#include "arealepi/estimation.hpp"
#include "arealepi/forecast.hpp"
#include "arealepi/model.hpp"

namespace arealepi::io {

using nlohmann::json;

inline constexpr const char* kFitSchema = "arealepi.fit/1";

/// Flat document keyed by parameter symbol names; deviations and psi are
/// arrays in region order.
json params_to_json(const Params& p);
/// Throws SchemaMismatch when array lengths disagree with `spec` and
/// `num_regions` or a required key is missing.
Params params_from_json(const json& j, const ModelSpec& spec, std::size_t num_regions);

/// Spec flags plus the weight construction (max order, normalization); the
/// weight matrix itself is rebuilt from the border list.
json spec_to_json(const ModelSpec& spec);
/// Flags only; `weights` is left empty.
ModelSpec spec_from_json(const json& j);

struct FitDocument {
  FitResult fit;
  /// Last training day.
  std::optional<Date> last_day;
};

json fit_to_json(const FitResult& fit, std::optional<Date> last_day = {});
/// Throws SchemaMismatch unless the schema tag, spec flags and region ids
/// match the expectation. The returned spec carries `expected.weights`.
FitDocument fit_from_json(const json& j, const ModelSpec& expected, const std::vector<std::string>& region_ids);

/// Estimates in the layout of the parameter table: exp scale for
/// intercept-like terms, log-scale SEs, stars at 0.01 / 0.05 / 0.1.
std::string format_table(const FitResult& fit);

/// One row per region plus a TOTAL row. `observed` may be empty.
void write_forecast_csv(std::ostream& out, const Forecast& f, const RegionSet& regions,
                        const std::vector<std::int64_t>& observed);
void write_decomposition_csv(std::ostream& out, const Decomposition& d);

/// Row of a published observed/predicted table.
struct FixtureRow {
  std::string name;
  std::string acronym;
  std::int64_t observed = 0;
  double predicted = 0.0;
};

/// Columns `name,acronym,observed,predicted`.
std::vector<FixtureRow> read_forecast_fixture(std::istream& in);

/// Files written together: every file goes to a temporary sibling first and
/// is renamed into place by commit(). Uncommitted temporaries are removed on
/// destruction.
class OutputBatch {
 public:
  OutputBatch() = default;
  OutputBatch(const OutputBatch&) = delete;
  OutputBatch& operator=(const OutputBatch&) = delete;
  ~OutputBatch();

  void add(const std::filesystem::path& path, const std::string& content);
  void commit();

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> files_;
};

void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace arealepi::io
