// stray: batch front-end for mode tables, ray fans and observation series.
//
//   stray modes   --config run.toml [--out DIR]
//   stray trace   --config run.toml [--out DIR] [--threads N] [--tol-rel X] [--emit-gradients]
//   stray observe --config run.toml [--out DIR] [--threads N] [--tol-rel X]
//
// Exit status: 0 ok, 1 numeric failure, 2 config error, 3 domain or physics error.
// Failures print one JSON object on stderr.

#include <fstream>
#include <iostream>
#include <iterator>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli/pipelines.hpp"
#include "stray/errors.hpp"

#ifndef STRAY_VERSION
#define STRAY_VERSION "0.0.0"
#endif

namespace {

int fail(const std::string& kind, const std::string& message, const std::string& field, int code) {
  nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  if (!field.empty()) j["error"]["field"] = field;
  std::cerr << j.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace stray;
  CLI::App app{"Adiabatic-mode space-time ray tracer"};
  app.set_version_flag("--version", STRAY_VERSION);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  stray::cli::RunOptions opts;
  opts.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto add_common = [&](CLI::App* sub, bool tracing) {
    sub->add_option("--config", config_path, "Run configuration (TOML)")->required();
    sub->add_option("--out", out_dir, "Output directory (default: run.output from the config)");
    if (tracing) {
      sub->add_option("--threads", opts.threads, "Worker threads for the ray fan")->check(CLI::Range(1, 1024));
      sub->add_option("--tol-rel", opts.tol_rel, "Relative integration tolerance in [1e-13, 1e-3]");
    }
  };
  CLI::App* modes = app.add_subcommand("modes", "Tabulate trapped modes");
  CLI::App* trace = app.add_subcommand("trace", "Trace a ray fan");
  CLI::App* observe = app.add_subcommand("observe", "Observe arrivals on a fixed-point line");
  add_common(modes, false);
  add_common(trace, true);
  add_common(observe, true);
  trace->add_flag("--emit-gradients", opts.emit_gradients, "Add computative and space-time gradients to rays.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("Usage", e.what(), "", 2);
  }

  try {
    stray::cli::Scenario scenario = stray::cli::Scenario::Trace;
    if (modes->parsed()) scenario = stray::cli::Scenario::Modes;
    if (observe->parsed()) scenario = stray::cli::Scenario::Observe;

    const stray::cli::RunConfig cfg = stray::cli::load_run_config(config_path, scenario);
    const stray::cli::RunResult result = stray::cli::run(cfg, opts);

    std::string config_text;
    {
      std::ifstream in(config_path, std::ios::binary);
      config_text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    nlohmann::json manifest = {
        {"tool", "stray"},
        {"version", STRAY_VERSION},
        {"scenario", stray::cli::to_string(scenario)},
        {"config", config_path},
        {"config_sha256", stray::cli::sha256_hex(config_text)},
        {"environment_sha256", stray::cli::sha256_hex(cfg.environment_text)},
        {"options",
         {{"tol_rel", opts.tol_rel ? nlohmann::json(*opts.tol_rel) : nlohmann::json(nullptr)},
          {"emit_gradients", opts.emit_gradients}}},
        {"units", "lengths and times in metres (time scaled by the reference speed), wavenumbers in 1/m"},
        {"summary", result.summary},
    };
    const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
    stray::cli::write_artifacts(dir, result.files, manifest);
    return 0;
  } catch (const Error& e) {
    return fail(std::string(to_string(e.kind())), e.what(), e.field(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), "", 1);
  }
}
