#include "pipelines.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "stray/errors.hpp"
#include "stray/field.hpp"
#include "stray/modes.hpp"
#include "stray/observation.hpp"

namespace stray::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

TraceOptions trace_options(const RunConfig& cfg, const RunOptions& opts) {
  TraceOptions to;
  to.ode = cfg.ode;
  if (opts.tol_rel) {
    if (!(*opts.tol_rel >= 1e-13 && *opts.tol_rel <= 1e-3))
      throw Error(ErrorKind::Validation, "--tol-rel must lie in [1e-13, 1e-3]", "tol-rel");
    to.ode.rtol = *opts.tol_rel;
  }
  to.knot_count = cfg.knots;
  // Amplitude gradients need the second variation.
  to.second_variation = cfg.second_variation || opts.emit_gradients;
  to.allow_truncation = true;
  return to;
}

std::vector<double> emission_nu(const RunConfig& cfg) {
  std::vector<double> nu = cfg.emission.values();
  for (double& v : nu) v *= cfg.env->c0();
  return nu;
}

double trace_end(const RunConfig& cfg) { return cfg.env->c0() * (cfg.emission.max + cfg.duration); }

std::string flags(bool caustic_band, bool rank_loss, bool front_undefined = false) {
  std::string f;
  auto add = [&](const char* s) { f += f.empty() ? s : std::string("|") + s; };
  if (caustic_band) add("caustic_band");
  if (rank_loss) add("rank_loss");
  if (front_undefined) add("front_undefined");
  return f.empty() ? "ok" : f;
}

}  // namespace

RunResult run_modes(const RunConfig& cfg) {
  const Environment& env = *cfg.env;
  Csv csv({"frequency_hz", "w_per_m", "mode", "q_per_m", "gamma_per_m", "beta_per_m", "group_speed_mps",
           "phase_speed_mps"});
  RunResult res;
  nlohmann::json counts = nlohmann::json::array();
  for (double f : cfg.frequencies_hz) {
    const double w = env.wavenumber(f);
    const std::vector<ModeSolution> modes = solve_modes(env, w, cfg.mx, cfg.my);
    for (const auto& m : modes) {
      csv << f << w << m.index << m.q << m.gamma << m.beta << env.c0() / dq_dw(env, m) << env.c0() * w / m.q;
      csv.end_row();
    }
    counts.push_back({{"frequency_hz", f}, {"modes", modes.size()}});
  }
  res.files.push_back({"modes.csv", csv.str()});
  res.summary["mode_counts"] = counts;
  return res;
}

RunResult run_trace(const RunConfig& cfg, const RunOptions& opts) {
  if (opts.emit_gradients && cfg.mu.count < 2)
    throw Error(ErrorKind::Validation, "gradient output needs at least two launch angles", "fan.mu_count");
  const Environment& env = *cfg.env;
  const TraceOptions to = trace_options(cfg, opts);
  const auto inits = initial_fan(env, cfg.mode, cfg.source, cfg.mu.values(), emission_nu(cfg));
  const auto rays = trace_fan(env, cfg.mode, inits, trace_end(cfg), to, opts.threads);

  std::vector<std::string> header{"mu_index", "nu_index", "mu", "nu", "tau", "x", "y", "w", "kx", "ky",
                                  "arclength", "phase", "amplitude", "det", "hamiltonian"};
  if (opts.emit_gradients)
    for (const char* h : {"dphase_dtau", "dphase_dmu", "dphase_dnu", "damp_dtau", "damp_dmu", "damp_dnu",
                          "dphase_dt_st", "dphase_dx_st", "dphase_dy_st"})
      header.emplace_back(h);
  header.emplace_back("flags");
  Csv csv(header);
  Csv caustics({"mu_index", "nu_index", "tau", "sign_before", "sign_after"});
  nlohmann::json truncated = nlohmann::json::array();

  for (const RaySolution& ray : rays) {
    const InitialState& in = ray.init;
    for (std::size_t i : ray.knot_indices()) {
      const double tau = ray.tau(i);
      const RayState st = ray.sample(i);
      csv << in.mu_index << in.nu_index << in.mu << in.nu << tau << st.f.x << st.f.y << st.f.w << st.f.kx
          << st.f.ky << st.arclength;
      bool band = false, rank_loss = false;
      FieldState fs;
      try {
        fs = field_state(ray, tau);
        band = fs.in_caustic_band;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::RankLoss) throw;
        rank_loss = true;
      }
      if (rank_loss) csv << phase(ray, tau) << kNaN << kNaN;
      else csv << fs.phase << fs.amplitude << fs.det;
      csv << ray.hamiltonian[i];
      if (opts.emit_gradients) {
        Vec3 gst = Vec3::Constant(kNaN);
        if (!rank_loss) {
          try {
            gst = space_time_gradient(fs.frame, fs.grad_phase);
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::RankLoss) throw;
          }
        }
        for (int a = 0; a < 3; ++a) csv << (rank_loss ? kNaN : fs.grad_phase[a]);
        for (int a = 0; a < 3; ++a) csv << (rank_loss || band ? kNaN : fs.grad_amplitude[a]);
        for (int a = 0; a < 3; ++a) csv << gst[a];
      }
      csv << flags(band, rank_loss);
      csv.end_row();
    }
    for (const auto& c : ray.caustics) {
      caustics << in.mu_index << in.nu_index << c.tau << c.sign_before << c.sign_after;
      caustics.end_row();
    }
    if (ray.truncated)
      truncated.push_back({{"mu_index", in.mu_index}, {"nu_index", in.nu_index}, {"tau", ray.tau_end()},
                           {"reason", ray.truncation_reason}});
  }

  RunResult res;
  res.files.push_back({"rays.csv", csv.str()});
  res.files.push_back({"caustics.csv", caustics.str()});
  res.summary["rays"] = rays.size();
  res.summary["truncated"] = truncated;
  return res;
}

RunResult run_observe(const RunConfig& cfg, const RunOptions& opts) {
  const Environment& env = *cfg.env;
  const ObserveSpec& ob = *cfg.observe;
  const double c0 = env.c0();
  const TraceOptions to = trace_options(cfg, opts);
  const Fan fan = trace_fan_grid(env, cfg.mode, cfg.source, cfg.mu.values(), emission_nu(cfg), trace_end(cfg), to,
                                 opts.threads);
  const ObservationLine line = ObservationLine::fixed_point(c0 * ob.t0, ob.x, ob.y);
  const double r0 = c0 * ob.rho_start, r1 = c0 * ob.rho_end;

  EvolveOptions eo;
  eo.ode.rtol = std::min(to.ode.rtol, 1e-10);
  for (int i = 1; i <= ob.knots; ++i) eo.knots.push_back(r0 + (r1 - r0) * i / ob.knots);
  for (const auto& [a, b] : ob.compression_pairs) {
    for (double v : {a, b}) {
      if (v < ob.rho_start || v > ob.rho_end)
        throw Error(ErrorKind::Validation, "compression pair outside the observation span", "observe.compression_pairs");
      if (c0 * v > r0) eo.knots.push_back(c0 * v);
    }
  }

  const std::vector<Arrival> arrivals = locate_arrivals(fan, line.point(r0));
  Csv csv({"rho", "branch", "tau", "x", "y", "w_obs", "kx", "ky", "amplitude", "phase", "front_angle",
           "front_angle_spacetime", "mu", "nu", "flags"});
  nlohmann::json branches = nlohmann::json::array(), compression = nlohmann::json::array();
  std::map<double, std::vector<ObservationRecord>> by_rho;

  for (const Arrival& a : arrivals) {
    const ObservationSeries s = evolve_along_line(fan, line, a, r0, r1, eo);
    for (const auto& r : s.records) {
      csv << r.rho << r.branch << r.point[0] << r.point[1] << r.point[2] << r.w_obs << r.k_obs[0] << r.k_obs[1]
          << r.amplitude << r.phase << r.front_angle << r.front_angle_spacetime << r.r[1] << r.r[2]
          << flags(r.caustic_band, false, !r.front_defined);
      csv.end_row();
      by_rho[r.rho].push_back(r);
    }
    branches.push_back({{"branch", a.branch},
                        {"mu", a.r[1]},
                        {"nu", a.r[2]},
                        {"records", s.records.size()},
                        {"stopped_at_caustic", s.stopped_at_caustic},
                        {"last_valid_rho", s.last_valid_rho}});
    for (const auto& [pa, pb] : ob.compression_pairs) {
      nlohmann::json entry = {{"branch", a.branch}, {"rho", c0 * pa}, {"rho_prime", c0 * pb}};
      try {
        const TimeCompression tc = time_compression(s, c0 * pa, c0 * pb);
        entry["dtau"] = tc.dtau;
        entry["dtau0"] = tc.dtau0;
        entry["ratio"] = tc.ratio;
      } catch (const Error& e) {
        entry["error"] = std::string(to_string(e.kind())) + ": " + e.what();
      }
      compression.push_back(entry);
    }
  }

  RunResult res;
  res.files.push_back({"observation.csv", csv.str()});
  if (arrivals.size() > 1) {
    Csv sum({"rho", "branches", "re", "im", "magnitude"});
    for (const auto& [rho, recs] : by_rho) {
      const auto z = coherent_sum(recs);
      sum << rho << static_cast<long>(recs.size()) << z.real() << z.imag() << std::abs(z);
      sum.end_row();
    }
    res.files.push_back({"coherent.csv", sum.str()});
  }
  res.summary["branches"] = branches;
  res.summary["compression"] = compression;
  res.summary["front_angle_convention"] =
      "unoriented angle in [0, pi/2] between amplitude and phase level sets; spacetime variant treats "
      "(tau, x, y) as Euclidean with tau in metres";
  res.files.push_back({"summary.json", res.summary.dump(2) + "\n"});
  return res;
}

RunResult run(const RunConfig& cfg, const RunOptions& opts) {
  switch (cfg.scenario) {
    case Scenario::Modes:
      return run_modes(cfg);
    case Scenario::Trace:
      return run_trace(cfg, opts);
    case Scenario::Observe:
      return run_observe(cfg, opts);
  }
  throw Error(ErrorKind::Validation, "unknown scenario", "run.scenario");
}

}  // namespace stray::cli
