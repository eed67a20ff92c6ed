#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "stray/errors.hpp"
#include "toml_util.hpp"

namespace stray::cli {

using namespace stray::detail;

namespace {

std::string read_file(const std::filesystem::path& p, const std::string& field) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot read '" + p.string() + "'", field);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int get_count(const toml::table& t, std::string_view path, std::string_view key, int fallback) {
  const auto v = opt_int(t, path, key);
  if (!v) return fallback;
  if (*v < 1 || *v > 1000000)
    throw Error(ErrorKind::Validation, "'" + join_path(path, key) + "' must be between 1 and 1e6", join_path(path, key));
  return static_cast<int>(*v);
}

Grid1 get_grid(const toml::table& t, std::string_view path, std::string_view name, double def) {
  Grid1 g;
  const std::string n(name);
  g.min = get_double(t, path, n + "_min", def);
  g.max = get_double(t, path, n + "_max", g.min);
  g.count = get_count(t, path, n + "_count", 1);
  const std::string field = join_path(path, n + "_count");
  if (g.count == 1 && g.max != g.min)
    throw Error(ErrorKind::Validation, "a single-point grid needs " + n + "_min == " + n + "_max", field);
  if (g.count > 1 && !(g.max > g.min))
    throw Error(ErrorKind::Validation, n + "_max must exceed " + n + "_min", join_path(path, n + "_max"));
  return g;
}

void check_tolerance(double v, const std::string& field) {
  if (!(v >= 1e-13 && v <= 1e-3)) throw Error(ErrorKind::Validation, "'" + field + "' must lie in [1e-13, 1e-3]", field);
}

}  // namespace

std::vector<double> Grid1::values() const {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(count == 1 ? min : min + (max - min) * i / (count - 1));
  return out;
}

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Modes:
      return "modes";
    case Scenario::Trace:
      return "trace";
    case Scenario::Observe:
      return "observe";
  }
  return "?";
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           std::optional<Scenario> forced) {
  const toml::table doc = parse_toml(text);
  reject_unknown_keys(doc, "", {"run", "modes", "source", "fan", "integration", "observe", "units", "medium", "bathymetry"});

  RunConfig cfg;
  const toml::table& run = require_table(doc, "run");
  reject_unknown_keys(run, "run", {"scenario", "mode", "environment", "output"});
  if (auto scenario = opt_string(run, "run", "scenario")) {
    if (*scenario == "modes") cfg.scenario = Scenario::Modes;
    else if (*scenario == "trace") cfg.scenario = Scenario::Trace;
    else if (*scenario == "observe") cfg.scenario = Scenario::Observe;
    else throw Error(ErrorKind::Validation, "unknown scenario '" + *scenario + "'", "run.scenario");
    if (forced && *forced != cfg.scenario)
      throw Error(ErrorKind::Validation,
                  "config scenario '" + *scenario + "' does not match subcommand '" + to_string(*forced) + "'",
                  "run.scenario");
  } else if (forced) {
    cfg.scenario = *forced;
  }
  const auto mode = opt_int(run, "run", "mode").value_or(0);
  if (mode < 0 || mode > 10000) throw Error(ErrorKind::Validation, "'run.mode' must be a non-negative mode index", "run.mode");
  cfg.mode = static_cast<int>(mode);
  cfg.output_dir = opt_string(run, "run", "output").value_or("out");

  // Environment: external file or inline tables, not both.
  if (auto path = opt_string(run, "run", "environment")) {
    if (doc.contains("medium") || doc.contains("bathymetry") || doc.contains("units"))
      throw Error(ErrorKind::Validation, "environment given both inline and by file", "run.environment");
    std::filesystem::path p(*path);
    if (p.is_relative()) p = base_dir / p;
    cfg.env = std::make_shared<Environment>(load_environment(read_file(p, "run.environment")));
  } else {
    cfg.env = std::make_shared<Environment>(environment_from_table(doc));
  }
  cfg.environment_text = serialize(*cfg.env);
  const double c0 = cfg.env->c0();

  if (cfg.scenario == Scenario::Modes) {
    const toml::table& m = require_table(doc, "modes");
    reject_unknown_keys(m, "modes", {"frequencies", "x", "y"});
    const auto f = opt_doubles(m, "modes", "frequencies");
    if (!f || f->empty()) throw Error(ErrorKind::Validation, "missing 'modes.frequencies'", "modes.frequencies");
    for (double v : *f)
      if (!(v > 0.0)) throw Error(ErrorKind::Validation, "frequencies must be positive", "modes.frequencies");
    cfg.frequencies_hz = *f;
    cfg.mx = get_double(m, "modes", "x", 0.0);
    cfg.my = get_double(m, "modes", "y", 0.0);
    return cfg;
  }

  const toml::table& src = require_table(doc, "source");
  reject_unknown_keys(src, "source",
                      {"x", "y", "start_radius", "frequency", "chirp_rate", "amplitude", "envelope", "center_time"});
  const double f_hz = get_double(src, "source", "frequency");
  if (!(f_hz > 0.0)) throw Error(ErrorKind::Validation, "'source.frequency' must be positive", "source.frequency");
  cfg.source.x0 = get_double(src, "source", "x", 0.0);
  cfg.source.y0 = get_double(src, "source", "y", 0.0);
  cfg.source.start_radius = get_double(src, "source", "start_radius", 100.0);
  if (!(cfg.source.start_radius > 0.0))
    throw Error(ErrorKind::Validation, "'source.start_radius' must be positive", "source.start_radius");
  cfg.source.w_center = cfg.env->wavenumber(f_hz);
  cfg.source.chirp_slope = 2.0 * M_PI * get_double(src, "source", "chirp_rate", 0.0) / (c0 * c0);
  cfg.source.amplitude = get_double(src, "source", "amplitude", 1.0);
  const double envelope = get_double(src, "source", "envelope", 0.0);
  if (envelope < 0.0) throw Error(ErrorKind::Validation, "'source.envelope' must be non-negative", "source.envelope");
  cfg.source.envelope_width = envelope * c0;
  cfg.source.nu_center = get_double(src, "source", "center_time", 0.0) * c0;

  const toml::table& fan = require_table(doc, "fan");
  reject_unknown_keys(fan, "fan", {"mu_min", "mu_max", "mu_count", "emission_min", "emission_max", "emission_count"});
  cfg.mu = get_grid(fan, "fan", "mu", 0.0);
  cfg.emission = get_grid(fan, "fan", "emission", 0.0);
  for (double t : cfg.emission.values())
    if (!(cfg.source.frequency(t * c0) > 0.0))
      throw Error(ErrorKind::Validation, "the chirp reaches a non-positive frequency inside the emission window",
                  "source.chirp_rate");

  const toml::table& in = require_table(doc, "integration");
  reject_unknown_keys(in, "integration", {"duration", "rtol", "atol", "knots", "second_variation"});
  cfg.duration = get_double(in, "integration", "duration");
  if (!(cfg.duration > 0.0)) throw Error(ErrorKind::Validation, "'integration.duration' must be positive", "integration.duration");
  cfg.ode.rtol = get_double(in, "integration", "rtol", 1e-9);
  cfg.ode.atol = get_double(in, "integration", "atol", 1e-12);
  check_tolerance(cfg.ode.rtol, "integration.rtol");
  if (!(cfg.ode.atol > 0.0 && cfg.ode.atol <= 1e-3))
    throw Error(ErrorKind::Validation, "'integration.atol' must lie in (0, 1e-3]", "integration.atol");
  cfg.knots = get_count(in, "integration", "knots", 100);
  cfg.second_variation = opt_bool(in, "integration", "second_variation").value_or(true);

  if (cfg.scenario == Scenario::Observe) {
    const toml::table& ob = require_table(doc, "observe");
    reject_unknown_keys(ob, "observe", {"x", "y", "t0", "rho_start", "rho_end", "knots", "compression_pairs"});
    ObserveSpec o;
    o.x = get_double(ob, "observe", "x");
    o.y = get_double(ob, "observe", "y");
    o.t0 = get_double(ob, "observe", "t0");
    o.rho_start = get_double(ob, "observe", "rho_start", 0.0);
    o.rho_end = get_double(ob, "observe", "rho_end");
    if (!(o.rho_end > o.rho_start))
      throw Error(ErrorKind::Validation, "'observe.rho_end' must exceed 'observe.rho_start'", "observe.rho_end");
    o.knots = get_count(ob, "observe", "knots", 20);
    if (auto rows = opt_double_rows(ob, "observe", "compression_pairs")) {
      for (const auto& r : *rows) {
        if (r.size() != 2)
          throw Error(ErrorKind::Validation, "compression pairs are [rho, rho'] lists", "observe.compression_pairs");
        o.compression_pairs.emplace_back(r[0], r[1]);
      }
    }
    cfg.observe = o;
    cfg.second_variation = true;
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<Scenario> forced) {
  return parse_run_config(read_file(path, "config"), path.parent_path(), forced);
}

}  // namespace stray::cli
