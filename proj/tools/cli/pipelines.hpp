#pragma once

// The modes, trace and observe pipelines behind the CLI subcommands.

#include <optional>
#include <vector>

#include <json.hpp>

#include "artifacts.hpp"
#include "run_config.hpp"

namespace stray::cli {

struct RunOptions {
  int threads = 1;
  std::optional<double> tol_rel;  // overrides integration.rtol
  bool emit_gradients = false;
};

struct RunResult {
  std::vector<Artifact> files;
  nlohmann::json summary = nlohmann::json::object();
};

RunResult run_modes(const RunConfig& cfg);
RunResult run_trace(const RunConfig& cfg, const RunOptions& opts);
RunResult run_observe(const RunConfig& cfg, const RunOptions& opts);

/// Dispatch on cfg.scenario.
RunResult run(const RunConfig& cfg, const RunOptions& opts);

}  // namespace stray::cli
