#include "arealepi/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "arealepi/csv.hpp"
#include "arealepi/error.hpp"

namespace arealepi {

namespace {

[[noreturn]] void bad(std::size_t line, const std::string& key, const std::string& msg) {
  throw Error(ErrorKind::InvalidInput, "config line " + std::to_string(line) + ", key '" + key + "': " + msg);
}

bool parse_bool(const std::string& v, std::size_t line, const std::string& key) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  bad(line, key, "expected true/false, got '" + v + "'");
}

template <class T>
T parse_integer(const std::string& v, std::size_t line, const std::string& key) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) bad(line, key, "expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& v, std::size_t line, const std::string& key) {
  try {
    return csv::parse_double(v, line, key);
  } catch (const Error&) {
    bad(line, key, "expected a number, got '" + v + "'");
  }
}

std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* boolean(bool b) { return b ? "true" : "false"; }

using Setter = std::function<void(RunConfig&, const std::string&, std::size_t, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    auto str = [&](const char* k, std::string RunConfig::*f) {
      m[k] = [f](RunConfig& c, const std::string& v, std::size_t, const std::string&) { c.*f = v; };
    };
    auto flag = [&](const char* k, bool RunConfig::*f) {
      m[k] = [f](RunConfig& c, const std::string& v, std::size_t l, const std::string& key) {
        c.*f = parse_bool(v, l, key);
      };
    };
    auto num = [&](const char* k, double RunConfig::*f) {
      m[k] = [f](RunConfig& c, const std::string& v, std::size_t l, const std::string& key) {
        c.*f = parse_real(v, l, key);
      };
    };
    auto integer = [&](const char* k, int RunConfig::*f) {
      m[k] = [f](RunConfig& c, const std::string& v, std::size_t l, const std::string& key) {
        c.*f = parse_integer<int>(v, l, key);
      };
    };
    str("counts", &RunConfig::counts);
    str("covariates", &RunConfig::covariates);
    str("borders", &RunConfig::borders);
    str("params", &RunConfig::params);
    str("fit_json", &RunConfig::fit_json);
    str("out_dir", &RunConfig::out_dir);
    m["seed"] = [](RunConfig& c, const std::string& v, std::size_t l, const std::string& k) {
      c.seed = parse_integer<std::uint64_t>(v, l, k);
    };
    flag("lambda", &RunConfig::lambda);
    flag("lambda_random", &RunConfig::lambda_random);
    flag("phi", &RunConfig::phi);
    flag("phi_random", &RunConfig::phi_random);
    flag("phi_log_pop_share", &RunConfig::phi_log_pop_share);
    flag("nu", &RunConfig::nu);
    flag("nu_random", &RunConfig::nu_random);
    flag("nu_t", &RunConfig::nu_t);
    flag("nu_t2", &RunConfig::nu_t2);
    flag("nu_log_over65", &RunConfig::nu_log_over65);
    m["overdispersion"] = [](RunConfig& c, const std::string& v, std::size_t l, const std::string& k) {
      try {
        c.overdispersion = overdispersion_from_string(v);
      } catch (const Error& e) {
        bad(l, k, e.what());
      }
    };
    flag("between_uses_counts", &RunConfig::between_uses_counts);
    integer("time_offset", &RunConfig::time_offset);
    integer("max_order", &RunConfig::max_order);
    flag("normalize_weights", &RunConfig::normalize_weights);
    integer("max_outer_iters", &RunConfig::max_outer_iters);
    integer("max_inner_iters", &RunConfig::max_inner_iters);
    num("tol_params", &RunConfig::tol_params);
    num("tol_loglik", &RunConfig::tol_loglik);
    num("sigma2_floor", &RunConfig::sigma2_floor);
    m["init"] = [](RunConfig& c, const std::string& v, std::size_t l, const std::string& k) {
      try {
        c.init = init_from_string(v);
      } catch (const Error& e) {
        bad(l, k, e.what());
      }
    };
    flag("clip_negatives_to_zero", &RunConfig::clip_negatives_to_zero);
    m["train_until"] = [](RunConfig& c, const std::string& v, std::size_t l, const std::string& k) {
      if (v.empty()) {
        c.train_until.reset();
        return;
      }
      try {
        c.train_until = Date::parse(v);
      } catch (const Error& e) {
        bad(l, k, e.what());
      }
    };
    num("level", &RunConfig::level);
    m["sim_days"] = [](RunConfig& c, const std::string& v, std::size_t l, const std::string& k) {
      c.sim_days = parse_integer<std::size_t>(v, l, k);
    };
    m["sim_start"] = [](RunConfig& c, const std::string& v, std::size_t l, const std::string& k) {
      try {
        c.sim_start = Date::parse(v);
      } catch (const Error& e) {
        bad(l, k, e.what());
      }
    };
    num("mu_cap", &RunConfig::mu_cap);
    return m;
  }();
  return table;
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = csv::trim(raw);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidInput, "config line " + std::to_string(line) + ": expected key = value");
    }
    const std::string key = csv::trim(text.substr(0, eq));
    const std::string value = csv::trim(text.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) bad(line, key, "unknown key");
    it->second(c, value, line, key);
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open config " + path.string());
  return parse(in, path.parent_path());
}

void RunConfig::write(std::ostream& out) const {
  out << "# data\n"
      << "counts = " << counts << "\n"
      << "covariates = " << covariates << "\n"
      << "borders = " << borders << "\n"
      << "params = " << params << "\n"
      << "fit_json = " << fit_json << "\n"
      << "out_dir = " << out_dir << "\n"
      << "seed = " << seed << "\n"
      << "\n# model\n"
      << "lambda = " << boolean(lambda) << "\n"
      << "lambda_random = " << boolean(lambda_random) << "\n"
      << "phi = " << boolean(phi) << "\n"
      << "phi_random = " << boolean(phi_random) << "\n"
      << "phi_log_pop_share = " << boolean(phi_log_pop_share) << "\n"
      << "nu = " << boolean(nu) << "\n"
      << "nu_random = " << boolean(nu_random) << "\n"
      << "nu_t = " << boolean(nu_t) << "\n"
      << "nu_t2 = " << boolean(nu_t2) << "\n"
      << "nu_log_over65 = " << boolean(nu_log_over65) << "\n"
      << "overdispersion = " << arealepi::to_string(overdispersion) << "\n"
      << "between_uses_counts = " << boolean(between_uses_counts) << "\n"
      << "time_offset = " << time_offset << "\n"
      << "max_order = " << max_order << "\n"
      << "normalize_weights = " << boolean(normalize_weights) << "\n"
      << "\n# fitting\n"
      << "max_outer_iters = " << max_outer_iters << "\n"
      << "max_inner_iters = " << max_inner_iters << "\n"
      << "tol_params = " << real(tol_params) << "\n"
      << "tol_loglik = " << real(tol_loglik) << "\n"
      << "sigma2_floor = " << real(sigma2_floor) << "\n"
      << "init = " << arealepi::to_string(init) << "\n"
      << "clip_negatives_to_zero = " << boolean(clip_negatives_to_zero) << "\n"
      << "train_until = " << (train_until ? train_until->iso() : std::string{}) << "\n"
      << "level = " << real(level) << "\n"
      << "\n# simulation\n"
      << "sim_days = " << sim_days << "\n"
      << "sim_start = " << sim_start.iso() << "\n"
      << "mu_cap = " << real(mu_cap) << "\n";
}

std::string RunConfig::to_string() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

ModelSpec RunConfig::spec() const {
  ModelSpec s;
  s.lambda.enabled = lambda;
  s.lambda.random_intercept = lambda_random;
  s.phi.enabled = phi;
  s.phi.random_intercept = phi_random;
  s.phi.log_pop_share = phi_log_pop_share;
  s.nu.enabled = nu;
  s.nu.random_intercept = nu_random;
  s.nu.t = nu_t;
  s.nu.t_squared = nu_t2;
  s.nu.log_over65 = nu_log_over65;
  s.overdispersion = overdispersion;
  s.between_uses_counts = between_uses_counts;
  s.time_offset = time_offset;
  return s;
}

FitOptions RunConfig::fit_options() const {
  FitOptions o;
  o.max_outer_iters = max_outer_iters;
  o.max_inner_iters = max_inner_iters;
  o.tol_params = tol_params;
  o.tol_loglik = tol_loglik;
  o.sigma2_floor = sigma2_floor;
  o.init = init;
  return o;
}

bool RunConfig::operator==(const RunConfig& o) const { return to_string() == o.to_string(); }

}  // namespace arealepi
