#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "arealepi/cli.hpp"
#include "arealepi/io.hpp"

using namespace arealepi;
namespace fs = std::filesystem;

namespace {

const fs::path kExample = fs::path(AREALEPI_SOURCE_DIR) / "data" / "example";
const fs::path kItaly = fs::path(AREALEPI_SOURCE_DIR) / "data" / "italy";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "arealepi");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Fresh directory holding a copy of the example inputs and a config.
fs::path workspace(const std::string& name, const std::string& extra_config = "") {
  const fs::path dir = fs::temp_directory_path() / ("arealepi_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const char* f : {"covariates.csv", "borders.csv", "params.json", "counts.csv"})
    fs::copy_file(kExample / f, dir / f);
  std::ofstream cfg(dir / "run.cfg");
  cfg << io::read_file(kExample / "example.cfg") << extra_config;
  return dir;
}

std::string cfg(const fs::path& dir) { return (dir / "run.cfg").string(); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(io::read_file(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    rows.push_back(f);
  }
  return rows;
}

}  // namespace

TEST_CASE("pipeline on the bundled example") {
  const fs::path dir = workspace("pipeline");
  fs::remove(dir / "counts.csv");

  const Run sim = run({"--config", cfg(dir), "simulate"});
  REQUIRE(sim.code == kExitOk);
  CHECK(io::read_file(dir / "out" / "counts.csv") == io::read_file(kExample / "counts.csv"));
  fs::rename(dir / "out" / "counts.csv", dir / "counts.csv");

  const Run f = run({"--config", cfg(dir), "fit"});
  CHECK(f.code == kExitOk);
  CHECK(fs::exists(dir / "out" / "fit.json"));
  CHECK(fs::exists(dir / "out" / "table1.txt"));
  CHECK(f.out.find("exp(alpha_lambda)") != std::string::npos);
  CHECK(f.err.find("outer 1") != std::string::npos);

  const Run p = run({"--config", cfg(dir), "predict"});
  CHECK(p.code == kExitOk);
  CHECK(p.out.find("predicted total ") == 0);
  CHECK(p.out.find(" vs observed ") != std::string::npos);
  CHECK(p.out.find("(2020-03-24)") != std::string::npos);
  const auto fc = read_csv(dir / "out" / "forecast.csv");
  REQUIRE(fc.size() == 22);
  CHECK(fc[0] == std::vector<std::string>{"region_id", "acronym", "observed", "predicted", "lo80", "hi80"});
  CHECK(fc[21][0] == "TOTAL");
  for (std::size_t i = 1; i <= 20; ++i) {
    CHECK(std::stoll(fc[i][4]) <= std::stoll(fc[i][5]));
  }

  const Run d = run({"--config", cfg(dir), "decompose"});
  CHECK(d.code == kExitOk);
  const auto dc = read_csv(dir / "out" / "decomposition.csv");
  REQUIRE(dc.size() == 21);
  for (std::size_t i = 1; i < dc.size(); ++i) {
    const double a = std::stod(dc[i][1]), b = std::stod(dc[i][2]), c = std::stod(dc[i][3]);
    CHECK(std::abs(a + b + c - 1.0) <= 1e-9);
    CHECK(std::min({a, b, c}) >= 0.0);
  }

  const Run lv = run({"--config", cfg(dir), "predict", "--level", "0.95"});
  CHECK(lv.code == kExitOk);
  CHECK(read_csv(dir / "out" / "forecast.csv")[0][4] == "lo95");
}

TEST_CASE("reruns are byte-identical") {
  std::vector<std::string> outputs[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path dir = workspace("rerun" + std::to_string(k));
    const std::string out = (dir / "o").string();
    REQUIRE(run({"--config", cfg(dir), "--out-dir", out, "--quiet", "simulate", "--days", "20"}).code == kExitOk);
    REQUIRE(run({"--config", cfg(dir), "--out-dir", out, "--quiet", "fit"}).code == kExitOk);
    REQUIRE(run({"--config", cfg(dir), "--out-dir", out, "--quiet", "predict"}).code == kExitOk);
    REQUIRE(run({"--config", cfg(dir), "--out-dir", out, "--quiet", "decompose"}).code == kExitOk);
    for (const char* f : {"counts.csv", "fit.json", "table1.txt", "forecast.csv", "decomposition.csv"})
      outputs[k].push_back(io::read_file(fs::path(out) / f));
  }
  CHECK(outputs[0] == outputs[1]);
}

TEST_CASE("seed flag overrides the config") {
  const fs::path dir = workspace("seed");
  REQUIRE(run({"--config", cfg(dir), "--quiet", "simulate", "--days", "5"}).code == kExitOk);
  const std::string a = io::read_file(dir / "out" / "counts.csv");
  REQUIRE(run({"--config", cfg(dir), "--quiet", "--seed", "8", "simulate", "--days", "5"}).code == kExitOk);
  CHECK(io::read_file(dir / "out" / "counts.csv") != a);
}

TEST_CASE("negative count is a validation error") {
  const fs::path dir = workspace("negative");
  std::string counts = io::read_file(dir / "counts.csv");
  const std::string target = "2020-02-26,P03,";
  const auto pos = counts.find(target);
  REQUIRE(pos != std::string::npos);
  counts.replace(pos + target.size(), counts.find('\n', pos) - pos - target.size(), "-4");
  io::write_file_atomic(dir / "counts.csv", counts);

  const Run r = run({"--config", cfg(dir), "fit"});
  CHECK(r.code == kExitInvalid);
  CHECK(r.err.find("2020-02-26") != std::string::npos);
  CHECK(r.err.find("P03") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "fit.json"));

  const Run clipped = run({"--config", cfg(dir), "--clip-negatives-to-zero", "fit"});
  CHECK(clipped.code == kExitOk);
  CHECK(clipped.err.find("P03") != std::string::npos);
}

TEST_CASE("iteration cap exits with 2") {
  const fs::path dir = workspace("cap", "max_outer_iters = 1\n");
  const Run r = run({"--config", cfg(dir), "--quiet", "fit"});
  CHECK(r.code == kExitNotConverged);
  REQUIRE(fs::exists(dir / "out" / "fit.json"));
  const auto j = io::json::parse(io::read_file(dir / "out" / "fit.json"));
  CHECK(j["converged"] == false);

  CHECK(run({"--config", cfg(dir), "--quiet", "predict"}).code == kExitInvalid);
  CHECK_FALSE(fs::exists(dir / "out" / "forecast.csv"));
  CHECK(run({"--config", cfg(dir), "--quiet", "predict", "--allow-unconverged"}).code == kExitOk);
}

TEST_CASE("missing or mismatched fit leaves no output") {
  const fs::path dir = workspace("missing");
  const Run r = run({"--config", cfg(dir), "predict"});
  CHECK(r.code != kExitOk);
  CHECK_FALSE(fs::exists(dir / "out" / "forecast.csv"));
  CHECK(run({"--config", cfg(dir), "decompose"}).code != kExitOk);
  CHECK_FALSE(fs::exists(dir / "out" / "decomposition.csv"));

  REQUIRE(run({"--config", cfg(dir), "--quiet", "fit"}).code == kExitOk);
  std::ofstream(dir / "other.cfg") << io::read_file(dir / "run.cfg") << "nu_t2 = false\n";
  const Run m = run({"--config", (dir / "other.cfg").string(), "predict"});
  CHECK(m.code == kExitInvalid);
  CHECK(m.err.find("SchemaMismatch") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "forecast.csv"));

  io::write_file_atomic(dir / "out" / "fit.json", "{ not json");
  CHECK(run({"--config", cfg(dir), "predict"}).code == kExitInvalid);
  CHECK_FALSE(fs::exists(dir / "out" / "forecast.csv"));
}

TEST_CASE("supercritical parameters exit with 3") {
  const fs::path dir = workspace("explode");
  auto p = io::json::parse(io::read_file(dir / "params.json"));
  p["alpha_lambda"] = std::log(4.0);
  io::write_file_atomic(dir / "params.json", p.dump());
  const Run r = run({"--config", cfg(dir), "simulate"});
  CHECK(r.code == kExitExplosion);
  CHECK(r.err.find("ExplosionGuard") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "counts.csv"));
}

TEST_CASE("endemic-only forecast and decomposition") {
  const fs::path dir = workspace("endemic", "lambda = false\nphi = false\n");
  REQUIRE(run({"--config", cfg(dir), "--quiet", "fit"}).code == kExitOk);
  REQUIRE(run({"--config", cfg(dir), "--quiet", "predict"}).code == kExitOk);
  REQUIRE(run({"--config", cfg(dir), "--quiet", "decompose"}).code == kExitOk);

  const auto j = io::json::parse(io::read_file(dir / "out" / "fit.json"));
  const auto& p = j["params"];
  const auto cov = read_csv(dir / "covariates.csv");
  const auto fc = read_csv(dir / "out" / "forecast.csv");
  const double t = 30.0;  // 29 training days
  for (std::size_t r = 0; r < 20; ++r) {
    const double e = std::stod(cov[r + 1][1]), a = std::stod(cov[r + 1][2]);
    const double nu = std::exp(p["alpha_nu"].get<double>() + p["b_nu"][r].get<double>() +
                               p["beta_nu_t"].get<double>() * t + p["beta_nu_t2"].get<double>() * t * t +
                               p["beta_nu_age"].get<double>() * std::log(a));
    CHECK(std::abs(std::stod(fc[r + 1][3]) - e * nu) <= 0.05 + 1e-9 * e * nu);
  }
  const auto dc = read_csv(dir / "out" / "decomposition.csv");
  for (std::size_t i = 1; i < dc.size(); ++i) {
    CHECK(dc[i][1] == "0");
    CHECK(dc[i][2] == "0");
    CHECK(dc[i][3] == "1");
  }
}

TEST_CASE("published table replay") {
  const fs::path dir = workspace("replay");
  const Run r = run({"--config", cfg(dir), "predict", "--from-table", (kItaly / "forecast_2020-03-18.csv").string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "predicted total 4190 vs observed 4204\n");
  const auto fc = read_csv(dir / "out" / "forecast.csv");
  REQUIRE(fc.size() == 109);
  CHECK(fc[108][0] == "TOTAL");
  CHECK(fc[108][2] == "4204");
  CHECK(std::abs(std::stod(fc[108][3]) - 4191.0) <= 6.0);
}

TEST_CASE("graph check") {
  const Run r = run({"graph-check", "--regions", (kItaly / "provinces.csv").string(), "--borders",
                     (kItaly / "borders.csv").string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("regions: 107\n") != std::string::npos);
  CHECK(r.out.find("components: 3\n") != std::string::npos);
  CHECK(r.out.find("isolated: none\n") != std::string::npos);

  const fs::path dir = workspace("graph");
  const Run e = run({"--config", cfg(dir), "graph-check"});
  CHECK(e.code == kExitOk);
  CHECK(e.out.find("regions: 20\n") != std::string::npos);
  CHECK(e.out.find("borders: 31\n") != std::string::npos);
  CHECK(e.out.find("components: 1\n") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == kExitInvalid);
  CHECK(run({"frobnicate"}).code == kExitInvalid);
  CHECK(run({"--config", "/nonexistent.cfg", "fit"}).code == kExitInvalid);
  CHECK(run({"--help"}).code == kExitOk);
}
