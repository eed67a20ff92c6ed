#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "cli/pipelines.hpp"
#include "stray/errors.hpp"
#include "support.hpp"

using namespace stray;
using namespace stray::cli;

namespace {

const std::string kEnv = R"(
[units]
reference_speed = 1500.0
[medium]
water_speed = 1500.0
bottom_speed = 1700.0
water_density = 1000.0
bottom_density = 1500.0
[bathymetry]
kind = "constant"
depth = 100.0
)";

std::string trace_config(int mu_count = 4) {
  return R"([run]
scenario = "trace"
mode = 0
)" + kEnv + R"(
[source]
frequency = 100.0
[fan]
mu_min = 0.0
mu_max = 1.5
mu_count = )" + std::to_string(mu_count) + R"(
[integration]
duration = 5.0
knots = 10
)";
}

std::string field_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const Error& e) {
    return e.field();
  }
  return "<no error>";
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("stray_cli_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

int run_binary(const std::string& args, const std::filesystem::path& err) {
  const std::string cmd = std::string(STRAY_CLI_PATH) + " " + args + " 2>" + err.string() + " >/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config validation names the offending key") {
  CHECK(field_of(trace_config() + "\n[extra]\nx = 1\n") == "extra");
  std::string bad = trace_config();
  bad.replace(bad.find("mode = 0"), 8, "mode = 0\nbogus = 1");
  CHECK(field_of(bad) == "run.bogus");
  std::string tol = trace_config() + "rtol = 1e-2\n";
  CHECK(field_of(tol) == "integration.rtol");
  std::string grid = trace_config(1);
  CHECK(field_of(grid) == "fan.mu_count");
  CHECK(field_of("[run]\nscenario = \"modes\"\n" + kEnv) == "modes");
  CHECK_NOTHROW(parse_run_config(trace_config()));
}

TEST_CASE("subcommand and config scenario must agree") {
  CHECK_THROWS_AS(parse_run_config(trace_config(), {}, Scenario::Modes), Error);
  const RunConfig cfg = parse_run_config(trace_config(), {}, Scenario::Trace);
  CHECK(cfg.scenario == Scenario::Trace);
}

TEST_CASE("modes table for the Pekeris waveguide") {
  const RunConfig cfg = parse_run_config("[run]\nscenario = \"modes\"\n" + kEnv + "[modes]\nfrequencies = [100.0]\n");
  const RunResult r = run_modes(cfg);
  const auto rows = parse_csv(r.files.at(0).content);
  CHECK(rows.size() == 7);  // header + 6 modes
  CHECK(rows[1][2] == "0");
  CHECK(rows[6][2] == "5");
}

TEST_CASE("trace output is deterministic and straight in a flat waveguide") {
  const RunConfig cfg = parse_run_config(trace_config());
  RunOptions one, many;
  one.threads = 1;
  many.threads = 3;
  many.emit_gradients = one.emit_gradients = true;
  const RunResult a = run_trace(cfg, one), b = run_trace(cfg, many), c = run_trace(cfg, one);
  CHECK(a.files.at(0).content == b.files.at(0).content);
  CHECK(a.files.at(0).content == c.files.at(0).content);

  const auto rows = parse_csv(a.files.at(0).content);
  REQUIRE(rows.size() == 1 + 4 * 11);
  // Every ray lies on its launch bearing: y cos(mu) = x sin(mu).
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double mu = std::stod(rows[i][2]), x = std::stod(rows[i][5]), y = std::stod(rows[i][6]);
    CHECK(std::abs(y * std::cos(mu) - x * std::sin(mu)) < 1e-9 * std::hypot(x, y));
  }
}

TEST_CASE("binary: exit codes, JSON errors and the manifest") {
  const auto dir = scratch("bin");
  {
    std::ofstream(dir / "good.toml") << trace_config();
    std::ofstream(dir / "bad.toml") << trace_config() << "\n[extra]\nx = 1\n";
    std::ofstream(dir / "cutoff.toml") << "[run]\nscenario = \"modes\"\n" << kEnv << "[modes]\nfrequencies = [1.0]\n";
  }
  const auto err = dir / "stderr.txt";
  CHECK(run_binary("trace --config " + (dir / "bad.toml").string() + " --out " + (dir / "o1").string(), err) == 2);
  CHECK(slurp(err).find("\"field\":\"extra\"") != std::string::npos);
  CHECK(run_binary("modes --config " + (dir / "cutoff.toml").string() + " --out " + (dir / "o2").string(), err) == 3);
  CHECK(slurp(err).find("NoTrappedModes") != std::string::npos);
  CHECK(run_binary("trace --config " + (dir / "missing.toml").string(), err) == 2);
  CHECK(run_binary("trace --config " + (dir / "good.toml").string() + " --tol-rel 1 --out " + (dir / "o3").string(),
                   err) == 2);

  REQUIRE(run_binary("trace --config " + (dir / "good.toml").string() + " --out " + (dir / "a").string(), err) == 0);
  REQUIRE(run_binary("trace --threads 2 --config " + (dir / "good.toml").string() + " --out " + (dir / "b").string(),
                     err) == 0);
  CHECK(slurp(dir / "a" / "rays.csv") == slurp(dir / "b" / "rays.csv"));
  CHECK(slurp(dir / "a" / "manifest.json").find("\"config_sha256\"") != std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  for (const auto& f : manifest["files"]) {
    const std::string body = slurp(dir / "a" / f["name"].get<std::string>());
    CHECK(f["bytes"].get<std::size_t>() == body.size());
    CHECK(f["sha256"].get<std::string>() == sha256_hex(body));
  }
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
