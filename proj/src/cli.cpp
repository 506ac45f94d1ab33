#include "arealepi/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "arealepi/config.hpp"
#include "arealepi/csv.hpp"
#include "arealepi/error.hpp"
#include "arealepi/estimation.hpp"
#include "arealepi/forecast.hpp"
#include "arealepi/graph.hpp"
#include "arealepi/io.hpp"

namespace arealepi {

namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
  bool clip = false;
  bool between_counts = false;
};

struct Inputs {
  RunConfig cfg;
  RegionSet regions;
  RegionCovariates cov;
  ModelSpec spec;
};

std::ifstream open(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, std::string("cannot open ") + what + " file " + path.string());
  return in;
}

RunConfig load_config(const Globals& g) {
  RunConfig cfg;
  if (!g.config.empty()) {
    cfg = RunConfig::load(g.config);
  } else {
    cfg.base_dir = fs::current_path();
  }
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out_dir.empty()) cfg.out_dir = fs::absolute(g.out_dir).string();
  if (g.clip) cfg.clip_negatives_to_zero = true;
  if (g.between_counts) cfg.between_uses_counts = true;
  return cfg;
}

std::string require(const std::string& value, const char* key) {
  if (value.empty()) throw Error(ErrorKind::InvalidInput, std::string("config key '") + key + "' is not set");
  return value;
}

std::shared_ptr<WeightMatrix> load_weights(const RunConfig& cfg, const RegionSet& regions) {
  auto in = open(cfg.resolve(require(cfg.borders, "borders")), "borders");
  const auto adj = build_adjacency(regions, read_borders(in));
  return std::make_shared<WeightMatrix>(build_weights(neighbor_order(adj), cfg.max_order, cfg.normalize_weights));
}

Inputs load_inputs(const Globals& g) {
  Inputs in;
  in.cfg = load_config(g);
  auto cov_in = open(in.cfg.resolve(require(in.cfg.covariates, "covariates")), "covariates");
  auto table = read_covariates(cov_in);
  in.regions = std::move(table.regions);
  in.cov = std::move(table.covariates);
  in.spec = in.cfg.spec();
  if (in.spec.phi.enabled) in.spec.weights = load_weights(in.cfg, in.regions);
  return in;
}

CountPanel load_counts(const Inputs& in, std::ostream& log) {
  auto counts_in = open(in.cfg.resolve(require(in.cfg.counts, "counts")), "counts");
  IngestOptions opts;
  opts.clip_negatives_to_zero = in.cfg.clip_negatives_to_zero;
  opts.log = &log;
  return ingest_counts(counts_in, in.regions, opts);
}

std::size_t days_through(const CountPanel& panel, const Date& last) {
  const auto& days = panel.days();
  for (std::size_t t = 0; t < days.size(); ++t) {
    if (days[t] == last) return t + 1;
  }
  throw Error(ErrorKind::InvalidInput, "counts do not contain the training day " + last.iso());
}

fs::path out_path(const RunConfig& cfg, const char* name) {
  const fs::path dir = cfg.resolve(cfg.out_dir);
  fs::create_directories(dir);
  return dir / name;
}

fs::path fit_path(const RunConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!cfg.fit_json.empty()) return cfg.resolve(cfg.fit_json);
  return cfg.resolve(cfg.out_dir) / "fit.json";
}

io::FitDocument load_fit(const Inputs& in, const fs::path& path) {
  const std::string text = io::read_file(path);
  io::json j;
  try {
    j = io::json::parse(text);
  } catch (const io::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, path.string() + " is not valid JSON: " + e.what());
  }
  std::vector<std::string> ids;
  for (const auto& r : in.regions.regions()) ids.push_back(r.id);
  return io::fit_from_json(j, in.spec, ids);
}

// Training panel of a stored fit and the counts of the following day, if any.
std::pair<CountPanel, std::vector<std::int64_t>> split_panel(const CountPanel& all, const std::optional<Date>& last) {
  const std::size_t n = last ? days_through(all, *last) : all.num_days();
  std::vector<std::int64_t> next;
  if (n < all.num_days()) {
    for (std::size_t r = 0; r < all.num_regions(); ++r) next.push_back(all(r, n));
  }
  return {all.head(n), next};
}

int cmd_fit(const Globals& g, std::ostream& out, std::ostream& err) {
  const Inputs in = load_inputs(g);
  std::ostringstream sink;
  std::ostream& log = g.quiet ? sink : err;
  CountPanel panel = load_counts(in, log);
  if (in.cfg.train_until) panel = panel.head(days_through(panel, *in.cfg.train_until));
  FitOptions opts = in.cfg.fit_options();
  opts.log = &log;
  const FitResult res = fit(in.spec, panel, in.cov, opts);

  io::OutputBatch batch;
  const auto fit_file = out_path(in.cfg, "fit.json");
  batch.add(fit_file, io::fit_to_json(res, panel.days().back()).dump(2) + "\n");
  batch.add(out_path(in.cfg, "table1.txt"), io::format_table(res));
  batch.commit();
  if (!g.quiet) out << io::format_table(res);
  if (!res.converged) {
    err << "fit did not converge within " << opts.max_outer_iters << " outer iterations; results written to "
        << fit_file.string() << "\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_predict_table(const std::string& table, std::ostream& out, const RunConfig& cfg) {
  auto in = open(table, "table");
  const auto rows = io::read_forecast_fixture(in);
  std::ostringstream csv;
  csv << "region_id,acronym,observed,predicted,lo80,hi80\n";
  std::int64_t obs = 0;
  double pred = 0.0;
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.1f", r.predicted);
    csv << r.acronym << ',' << r.acronym << ',' << r.observed << ',' << buf << ",,\n";
    obs += r.observed;
    pred += r.predicted;
  }
  std::snprintf(buf, sizeof buf, "%.1f", pred);
  csv << "TOTAL,," << obs << ',' << buf << ",,\n";
  io::write_file_atomic(out_path(cfg, "forecast.csv"), csv.str());
  std::snprintf(buf, sizeof buf, "%.0f", pred);
  out << "predicted total " << buf << " vs observed " << obs << "\n";
  return kExitOk;
}

int cmd_predict(const Globals& g, const std::string& fit_flag, const std::string& table, double level,
                bool allow_unconverged, std::ostream& out, std::ostream& err) {
  if (!table.empty()) return cmd_predict_table(table, out, load_config(g));
  const Inputs in = load_inputs(g);
  const auto doc = load_fit(in, fit_path(in.cfg, fit_flag));
  std::ostringstream sink;
  const auto all = load_counts(in, g.quiet ? sink : err);
  const auto last = doc.last_day ? doc.last_day : in.cfg.train_until;
  const auto [panel, observed] = split_panel(all, last);
  const double lvl = std::isnan(level) ? in.cfg.level : level;
  const Forecast f = one_step_ahead(doc.fit, panel, in.cov, lvl, allow_unconverged);
  std::ostringstream csv;
  io::write_forecast_csv(csv, f, in.regions, observed);
  io::write_file_atomic(out_path(in.cfg, "forecast.csv"), csv.str());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.0f", f.total());
  out << "predicted total " << buf;
  if (!observed.empty()) {
    std::int64_t total = 0;
    for (auto v : observed) total += v;
    out << " vs observed " << total;
  }
  out << " (" << f.horizon_date.iso() << ")\n";
  return kExitOk;
}

int cmd_decompose(const Globals& g, const std::string& fit_flag, std::ostream& out, std::ostream& err) {
  const Inputs in = load_inputs(g);
  const auto doc = load_fit(in, fit_path(in.cfg, fit_flag));
  std::ostringstream sink;
  const auto all = load_counts(in, g.quiet ? sink : err);
  const auto last = doc.last_day ? doc.last_day : in.cfg.train_until;
  const auto panel = split_panel(all, last).first;
  const Decomposition d = decompose(doc.fit, panel, in.cov);
  std::ostringstream csv;
  io::write_decomposition_csv(csv, d);
  const auto path = out_path(in.cfg, "decomposition.csv");
  io::write_file_atomic(path, csv.str());
  if (!g.quiet) out << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_simulate(const Globals& g, const std::string& params_flag, std::optional<std::size_t> days,
                 std::ostream& out) {
  const Inputs in = load_inputs(g);
  const fs::path ppath = params_flag.empty() ? in.cfg.resolve(require(in.cfg.params, "params")) : fs::path(params_flag);
  io::json j;
  try {
    j = io::json::parse(io::read_file(ppath));
  } catch (const io::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, ppath.string() + " is not valid JSON: " + e.what());
  }
  const Params p = io::params_from_json(j, in.spec, in.regions.size());
  SimulateOptions so;
  so.days = days.value_or(in.cfg.sim_days);
  so.start = in.cfg.sim_start;
  so.seed = in.cfg.seed;
  so.mu_cap = in.cfg.mu_cap;
  std::vector<std::int64_t> y0;
  const Predictors pr = predictors(p, in.spec, in.cov, 1);
  for (std::size_t r = 0; r < in.regions.size(); ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    y0.push_back(std::max<std::int64_t>(1, std::llround(in.cov.pop_share[ri] * pr.nu[ri])));
  }
  const CountPanel panel = simulate(p, in.spec, in.regions, in.cov, y0, so);
  std::ostringstream csv;
  write_counts(csv, panel);
  const auto path = out_path(in.cfg, "counts.csv");
  io::write_file_atomic(path, csv.str());
  if (!g.quiet) out << "wrote " << panel.num_days() << " days for " << panel.num_regions() << " regions to " << path.string() << "\n";
  return kExitOk;
}

RegionSet read_region_list(std::istream& in) {
  csv::Reader reader(in, {"region_id"});
  const int name_col = reader.column("name");
  std::vector<Region> regions;
  csv::Row row;
  while (reader.next(row)) {
    regions.push_back({row.fields[0], name_col >= 0 ? row.fields[static_cast<std::size_t>(name_col)] : std::string{}});
  }
  return RegionSet(std::move(regions));
}

int cmd_graph_check(const Globals& g, const std::string& regions_flag, const std::string& borders_flag,
                    std::ostream& out) {
  const RunConfig cfg = load_config(g);
  RegionSet regions;
  if (!regions_flag.empty()) {
    auto in = open(regions_flag, "regions");
    regions = read_region_list(in);
  } else {
    auto cov_in = open(cfg.resolve(require(cfg.covariates, "covariates")), "covariates");
    regions = read_covariates(cov_in).regions;
  }
  auto b_in = open(borders_flag.empty() ? cfg.resolve(require(cfg.borders, "borders")) : fs::path(borders_flag),
                   "borders");
  const auto adj = build_adjacency(regions, read_borders(b_in));
  const auto orders = neighbor_order(adj);
  const auto s = graph_stats(regions, adj, orders);
  out << "regions: " << s.regions << "\n"
      << "borders: " << s.borders << "\n"
      << "components: " << s.components << "\n"
      << "isolated:";
  for (const auto& id : s.isolated) out << ' ' << id;
  out << (s.isolated.empty() ? " none\n" : "\n");
  for (std::size_t k = 1; k < s.pairs_by_order.size(); ++k) {
    out << "pairs at order " << k << ": " << s.pairs_by_order[k] << "\n";
  }
  out << "unreachable pairs: " << s.unreachable_pairs << "\n"
      << "max finite order: " << s.max_finite_order << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Endemic-epidemic areal count model: fit, predict, decompose, simulate"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run configuration file (key = value)");
  app.add_option("--seed", g.seed, "Random seed (overrides config)");
  app.add_option("--out-dir", g.out_dir, "Output directory (overrides config)");
  app.add_flag("--quiet", g.quiet, "Suppress progress output");
  app.add_flag("--clip-negatives-to-zero", g.clip, "Clip negative counts to zero instead of failing");
  app.add_flag("--between-uses-counts", g.between_counts, "Use raw neighbour counts in the between term");

  auto* fit_cmd = app.add_subcommand("fit", "Fit the model; writes fit.json and table1.txt");
  auto* predict_cmd = app.add_subcommand("predict", "One-step-ahead forecast; writes forecast.csv");
  std::string fit_flag, table_flag;
  double level = std::nan("");
  bool allow_unconverged = false;
  predict_cmd->add_option("--fit", fit_flag, "fit.json produced by the fit command");
  predict_cmd->add_option("--level", level, "Interval level in (0, 1]");
  predict_cmd->add_option("--from-table", table_flag, "Replay a name,acronym,observed,predicted table");
  predict_cmd->add_flag("--allow-unconverged", allow_unconverged, "Forecast from an unconverged fit");
  auto* decompose_cmd = app.add_subcommand("decompose", "Component proportions; writes decomposition.csv");
  decompose_cmd->add_option("--fit", fit_flag, "fit.json produced by the fit command");
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate counts; writes counts.csv");
  std::string params_flag;
  std::optional<std::size_t> days;
  simulate_cmd->add_option("--params", params_flag, "Parameter JSON");
  simulate_cmd->add_option("--days", days, "Number of days (overrides config)");
  auto* graph_cmd = app.add_subcommand("graph-check", "Print neighbour-order statistics");
  std::string regions_flag, borders_flag;
  graph_cmd->add_option("--regions", regions_flag, "region_id[,name] list instead of the covariates file");
  graph_cmd->add_option("--borders", borders_flag, "Border list (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(g, out, err);
    if (predict_cmd->parsed()) return cmd_predict(g, fit_flag, table_flag, level, allow_unconverged, out, err);
    if (decompose_cmd->parsed()) return cmd_decompose(g, fit_flag, out, err);
    if (simulate_cmd->parsed()) return cmd_simulate(g, params_flag, days, out);
    if (graph_cmd->parsed()) return cmd_graph_check(g, regions_flag, borders_flag, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::ExplosionGuard ? kExitExplosion : kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace arealepi
