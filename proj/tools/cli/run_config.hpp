#pragma once

// Batch run configuration.
//
// A run config is one TOML document. The environment is either inline
// ([units], [medium], [bathymetry]) or loaded from [run].environment, a path
// relative to the config file. Times in the config are in seconds and are
// scaled to metres with the reference speed.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stray/environment.hpp"
#include "stray/raytrace.hpp"

namespace stray::cli {

enum class Scenario { Modes, Trace, Observe };

struct Grid1 {
  double min = 0.0, max = 0.0;
  int count = 1;
  std::vector<double> values() const;
};

struct ObserveSpec {
  double x = 0.0, y = 0.0;
  double t0 = 0.0;                     // s, reference time of rho = 0
  double rho_start = 0.0, rho_end = 0.0;  // s
  int knots = 20;
  std::vector<std::pair<double, double>> compression_pairs;  // (rho, rho') in s
};

struct RunConfig {
  Scenario scenario = Scenario::Trace;
  int mode = 0;
  std::shared_ptr<const Environment> env;
  std::string environment_text;  // canonical serialization, for the manifest

  // modes scenario
  std::vector<double> frequencies_hz;
  double mx = 0.0, my = 0.0;

  // trace and observe
  SourceSpec source;      // in internal units
  Grid1 mu;               // rad
  Grid1 emission;         // s
  double duration = 0.0;  // s after the latest emission
  int knots = 100;
  OdeOptions ode;
  bool second_variation = true;

  std::optional<ObserveSpec> observe;
  std::string output_dir = "out";
};

/// Parse and validate. Errors carry the offending key in Error::field().
/// `forced` (the CLI subcommand) wins over an absent run.scenario and must match a present one.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {},
                           std::optional<Scenario> forced = std::nullopt);
RunConfig load_run_config(const std::filesystem::path& path, std::optional<Scenario> forced = std::nullopt);

const char* to_string(Scenario s);

}  // namespace stray::cli
