#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "arealepi/data.hpp"
#include "arealepi/estimation.hpp"
#include "arealepi/model.hpp"

namespace arealepi {

// Key-value run configuration:
//
//   # comment
//   key = value
//
// Unknown keys and malformed values are errors. Relative paths are resolved
// against the directory of the config file.
struct RunConfig {
  std::string counts;
  std::string covariates;
  std::string borders;
  std::string params;
  std::string fit_json;
  std::string out_dir = ".";
  std::uint64_t seed = 1;

  bool lambda = true;
  bool lambda_random = true;
  bool phi = true;
  bool phi_random = true;
  bool phi_log_pop_share = true;
  bool nu = true;
  bool nu_random = true;
  bool nu_t = true;
  bool nu_t2 = true;
  bool nu_log_over65 = true;
  Overdispersion overdispersion = Overdispersion::Shared;
  bool between_uses_counts = false;
  int time_offset = 0;
  int max_order = 2;
  bool normalize_weights = true;

  int max_outer_iters = 100;
  int max_inner_iters = 50;
  double tol_params = 1e-6;
  double tol_loglik = 1e-8;
  double sigma2_floor = 1e-8;
  Init init = Init::EndemicGlmWarmstart;

  bool clip_negatives_to_zero = false;
  /// Last training day; empty uses every day of the counts file.
  std::optional<Date> train_until;
  double level = 0.8;

  std::size_t sim_days = 60;
  Date sim_start = Date::parse("2020-02-24");
  double mu_cap = 1e9;

  /// Directory relative paths are resolved against; not serialized.
  std::filesystem::path base_dir;

  static RunConfig parse(std::istream& in, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  void write(std::ostream& out) const;
  std::string to_string() const;

  std::filesystem::path resolve(const std::string& path) const;

  /// Model flags; `weights` is left empty.
  ModelSpec spec() const;
  FitOptions fit_options() const;

  bool operator==(const RunConfig& other) const;
};

}  // namespace arealepi
