#include "arealepi/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "arealepi/csv.hpp"
#include "arealepi/error.hpp"

namespace arealepi::io {

namespace {

constexpr std::array<const char*, 3> kBNames{"b_lambda", "b_phi", "b_nu"};
constexpr std::array<const char*, 3> kSigmaNames{"sigma2_lambda", "sigma2_phi", "sigma2_nu"};

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::SchemaMismatch, std::string("missing key '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw Error(ErrorKind::SchemaMismatch, std::string("key '") + key + "' is not a number");
  return v.get<double>();
}

Eigen::VectorXd vector_of(const json& j, const char* key, std::size_t n) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw Error(ErrorKind::SchemaMismatch, std::string("missing array '") + key + "'");
  }
  const auto& a = j.at(key);
  if (a.size() != n) {
    throw Error(ErrorKind::SchemaMismatch, std::string("'") + key + "' has " + std::to_string(a.size()) +
                                               " entries, expected " + std::to_string(n));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!a[i].is_number()) throw Error(ErrorKind::SchemaMismatch, std::string("'") + key + "' holds a non-number");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

bool flag(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_boolean()) {
    throw Error(ErrorKind::SchemaMismatch, std::string("spec flag '") + key + "' missing or not boolean");
  }
  return j.at(key).get<bool>();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const char* stars(double z) {
  if (!std::isfinite(z)) return "";
  const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

}  // namespace

json params_to_json(const Params& p) {
  json j;
  j["alpha_lambda"] = p.alpha_lambda;
  j["alpha_phi"] = p.alpha_phi;
  j["alpha_nu"] = p.alpha_nu;
  j["beta_phi_pop"] = p.beta_phi_pop;
  j["beta_nu_t"] = p.beta_nu_t;
  j["beta_nu_t2"] = p.beta_nu_t2;
  j["beta_nu_age"] = p.beta_nu_age;
  for (std::size_t c = 0; c < 3; ++c) {
    j[kBNames[c]] = vec(p.b(static_cast<Component>(c)));
    j[kSigmaNames[c]] = p.sigma2[c];
  }
  j["psi"] = vec(p.psi);
  return j;
}

Params params_from_json(const json& j, const ModelSpec& spec, std::size_t num_regions) {
  if (!j.is_object()) throw Error(ErrorKind::SchemaMismatch, "parameters must be a JSON object");
  Params p = Params::zeros(num_regions, spec);
  p.alpha_lambda = number(j, "alpha_lambda");
  p.alpha_phi = number(j, "alpha_phi");
  p.alpha_nu = number(j, "alpha_nu");
  p.beta_phi_pop = number(j, "beta_phi_pop");
  p.beta_nu_t = number(j, "beta_nu_t");
  p.beta_nu_t2 = number(j, "beta_nu_t2");
  p.beta_nu_age = number(j, "beta_nu_age");
  for (std::size_t c = 0; c < 3; ++c) {
    p.b(static_cast<Component>(c)) = vector_of(j, kBNames[c], num_regions);
    p.sigma2[c] = number(j, kSigmaNames[c]);
  }
  p.psi = vector_of(j, "psi", static_cast<std::size_t>(p.psi.size()));
  for (double v : p.psi) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::SchemaMismatch, "psi must be positive and finite");
  }
  return p;
}

json spec_to_json(const ModelSpec& s) {
  json j;
  j["lambda"] = {{"enabled", s.lambda.enabled}, {"random_intercept", s.lambda.random_intercept}};
  j["phi"] = {{"enabled", s.phi.enabled},
              {"random_intercept", s.phi.random_intercept},
              {"log_pop_share", s.phi.log_pop_share}};
  j["nu"] = {{"enabled", s.nu.enabled},   {"random_intercept", s.nu.random_intercept}, {"t", s.nu.t},
             {"t_squared", s.nu.t_squared}, {"log_over65", s.nu.log_over65}};
  j["overdispersion"] = to_string(s.overdispersion);
  j["between_uses_counts"] = s.between_uses_counts;
  j["time_offset"] = s.time_offset;
  if (s.weights) j["weights"] = {{"max_order", s.weights->max_order}, {"normalized", s.weights->normalized}};
  return j;
}

ModelSpec spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("lambda") || !j.contains("phi") || !j.contains("nu")) {
    throw Error(ErrorKind::SchemaMismatch, "spec must hold lambda, phi and nu sections");
  }
  ModelSpec s;
  const auto& l = j.at("lambda");
  s.lambda.enabled = flag(l, "enabled");
  s.lambda.random_intercept = flag(l, "random_intercept");
  const auto& ph = j.at("phi");
  s.phi.enabled = flag(ph, "enabled");
  s.phi.random_intercept = flag(ph, "random_intercept");
  s.phi.log_pop_share = flag(ph, "log_pop_share");
  const auto& n = j.at("nu");
  s.nu.enabled = flag(n, "enabled");
  s.nu.random_intercept = flag(n, "random_intercept");
  s.nu.t = flag(n, "t");
  s.nu.t_squared = flag(n, "t_squared");
  s.nu.log_over65 = flag(n, "log_over65");
  try {
    s.overdispersion = overdispersion_from_string(j.at("overdispersion").get<std::string>());
    s.between_uses_counts = j.at("between_uses_counts").get<bool>();
    s.time_offset = j.at("time_offset").get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("malformed spec: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::SchemaMismatch, e.what());
  }
  return s;
}

json fit_to_json(const FitResult& fit, std::optional<Date> last_day) {
  json j;
  j["schema"] = kFitSchema;
  j["spec"] = spec_to_json(fit.spec);
  j["region_ids"] = fit.region_ids;
  if (last_day) j["last_day"] = last_day->iso();
  j["params"] = params_to_json(fit.params);
  json se = json::object();
  for (std::size_t i = 0; i < fit.se.names.size(); ++i) {
    se[fit.se.names[i]] = number_or_null(fit.se.values[static_cast<Eigen::Index>(i)]);
  }
  j["se"] = se;
  j["loglik"] = number_or_null(fit.loglik);
  j["penalized_loglik"] = number_or_null(fit.penalized_loglik);
  j["marginal_loglik_approx"] = number_or_null(fit.marginal_loglik_approx);
  j["aic_like"] = number_or_null(fit.aic_like);
  j["converged"] = fit.converged;
  j["n_outer_iters"] = fit.n_outer_iters;
  j["n_inner_iters"] = fit.n_inner_iters;
  j["gradient_max_norm"] = number_or_null(fit.gradient_max_norm);
  j["boundary"] = {{"lambda", fit.boundary[0]}, {"phi", fit.boundary[1]}, {"nu", fit.boundary[2]}};
  return j;
}

FitDocument fit_from_json(const json& j, const ModelSpec& expected, const std::vector<std::string>& region_ids) {
  if (!j.is_object() || j.value("schema", std::string{}) != kFitSchema) {
    throw Error(ErrorKind::SchemaMismatch, std::string("not a fit document (expected schema ") + kFitSchema + ")");
  }
  if (!j.contains("spec")) throw Error(ErrorKind::SchemaMismatch, "fit document has no spec");
  if (j.at("spec") != spec_to_json(expected)) {
    throw Error(ErrorKind::SchemaMismatch, "fit was produced with a different model specification");
  }
  std::vector<std::string> ids;
  try {
    ids = j.at("region_ids").get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::SchemaMismatch, "fit document has no region_ids list");
  }
  if (ids != region_ids) throw Error(ErrorKind::SchemaMismatch, "fit was produced for a different region set");

  FitDocument doc;
  FitResult& f = doc.fit;
  f.spec = expected;
  f.region_ids = ids;
  if (!j.contains("params")) throw Error(ErrorKind::SchemaMismatch, "fit document has no params");
  f.params = params_from_json(j.at("params"), expected, ids.size());
  if (j.contains("se") && j.at("se").is_object()) {
    const auto& se = j.at("se");
    f.se.values.resize(static_cast<Eigen::Index>(se.size()));
    Eigen::Index i = 0;
    const ParamLayout layout(expected, ids.size());
    for (std::size_t k = 0; k < layout.num_fixed(); ++k) {
      const auto& name = layout.names()[k];
      if (!se.contains(name)) continue;
      f.se.names.push_back(name);
      f.se.values[i++] = se.at(name).is_null() ? std::numeric_limits<double>::quiet_NaN() : se.at(name).get<double>();
    }
    f.se.values.conservativeResize(i);
  }
  f.loglik = number(j, "loglik");
  f.penalized_loglik = number(j, "penalized_loglik");
  f.marginal_loglik_approx = number(j, "marginal_loglik_approx");
  f.aic_like = number(j, "aic_like");
  f.gradient_max_norm = number(j, "gradient_max_norm");
  try {
    f.converged = j.at("converged").get<bool>();
    f.n_outer_iters = j.at("n_outer_iters").get<int>();
    f.n_inner_iters = j.at("n_inner_iters").get<int>();
    const auto& b = j.at("boundary");
    f.boundary = {b.at("lambda").get<bool>(), b.at("phi").get<bool>(), b.at("nu").get<bool>()};
    if (j.contains("last_day")) doc.last_day = Date::parse(j.at("last_day").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("malformed fit document: ") + e.what());
  }
  return doc;
}

std::string format_table(const FitResult& fit) {
  const ParamLayout layout(fit.spec, fit.region_ids.size());
  std::ostringstream out;
  auto row = [&](const std::string& label, double est, double se, const char* mark) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-22s %14s %12s  %s\n", label.c_str(), fmt("%.6g", est).c_str(),
                  std::isfinite(se) ? fmt("%.4g", se).c_str() : "-", mark);
    out << buf;
  };
  char head[160];
  std::snprintf(head, sizeof head, "%-22s %14s %12s\n", "Parameter", "Estimate", "SE");
  out << head;
  for (std::size_t i = 0; i < fit.se.names.size(); ++i) {
    const auto& name = fit.se.names[i];
    const double se = fit.se.values[static_cast<Eigen::Index>(i)];
    const int idx = layout.index_of(name);
    if (idx < 0) continue;
    const double theta = layout.pack(fit.params)[idx];
    if (name.rfind("alpha_", 0) == 0) {
      row("exp(" + name + ")", std::exp(theta), se, stars(theta / se));
    } else if (name.rfind("log_psi", 0) == 0) {
      row(name.substr(4), std::exp(theta), se, "");
    } else {
      row(name, theta, se, stars(theta / se));
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    if (!fit.spec.random(static_cast<Component>(c))) continue;
    row(kSigmaNames[c], fit.params.sigma2[c], std::numeric_limits<double>::quiet_NaN(),
        fit.boundary[c] ? "(boundary)" : "");
  }
  out << "\nSE on the log scale for exp(.) and psi rows; variances carry no SE.\n"
      << "*** p < 0.01, ** p < 0.05, * p < 0.1 (two-sided Wald test of the log-scale coefficient = 0)\n\n";
  auto line = [&](const char* label, const std::string& value) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-28s %s\n", label, value.c_str());
    out << buf;
  };
  line("penalized loglik", fmt("%.6f", fit.penalized_loglik));
  line("marginal loglik (Laplace)", fmt("%.6f", fit.marginal_loglik_approx));
  if (std::isfinite(fit.aic_like)) line("AIC", fmt("%.6f", fit.aic_like));
  line("converged", std::string(fit.converged ? "yes" : "no") + " (" + std::to_string(fit.n_outer_iters) +
                        " outer iterations)");
  return out.str();
}

void write_forecast_csv(std::ostream& out, const Forecast& f, const RegionSet& regions,
                        const std::vector<std::int64_t>& observed) {
  const bool has_obs = !observed.empty();
  if (has_obs && observed.size() != regions.size()) {
    throw Error(ErrorKind::DimensionMismatch, "observed counts do not cover every region");
  }
  const std::string lo_name = "lo" + fmt("%.0f", 100.0 * f.level);
  const std::string hi_name = "hi" + fmt("%.0f", 100.0 * f.level);
  out << "region_id,acronym,observed,predicted," << lo_name << ',' << hi_name << '\n';
  std::int64_t obs_total = 0;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    out << regions[r].id << ',' << regions[r].name << ',';
    if (has_obs) {
      out << observed[r];
      obs_total += observed[r];
    }
    out << ',' << fmt("%.1f", f.mu_hat[static_cast<Eigen::Index>(r)]) << ',' << f.lo[r] << ',' << f.hi[r] << '\n';
  }
  out << "TOTAL,,";
  if (has_obs) out << obs_total;
  out << ',' << fmt("%.1f", f.total()) << ",,\n";
}

void write_decomposition_csv(std::ostream& out, const Decomposition& d) {
  out << "region_id,within,between,endemic\n";
  for (std::size_t r = 0; r < d.region_ids.size(); ++r) {
    out << d.region_ids[r];
    for (Eigen::Index c = 0; c < 3; ++c) out << ',' << fmt("%.17g", d.proportions(static_cast<Eigen::Index>(r), c));
    out << '\n';
  }
}

std::vector<FixtureRow> read_forecast_fixture(std::istream& in) {
  csv::Reader reader(in, {"name", "acronym", "observed", "predicted"});
  std::vector<FixtureRow> rows;
  csv::Row row;
  while (reader.next(row)) {
    FixtureRow f;
    f.name = row.fields[0];
    f.acronym = row.fields[1];
    f.observed = csv::parse_int(row.fields[2], row.line, "observed");
    f.predicted = csv::parse_double(row.fields[3], row.line, "predicted");
    rows.push_back(std::move(f));
  }
  return rows;
}

OutputBatch::~OutputBatch() {
  std::error_code ec;
  for (const auto& [tmp, dest] : files_) std::filesystem::remove(tmp, ec);
}

void OutputBatch::add(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + tmp.string());
    files_.emplace_back(tmp, path);
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::InvalidInput, "failed writing " + tmp.string());
  }
}

void OutputBatch::commit() {
  for (const auto& [tmp, dest] : files_) std::filesystem::rename(tmp, dest);
  files_.clear();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  OutputBatch batch;
  batch.add(path, content);
  batch.commit();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace arealepi::io
