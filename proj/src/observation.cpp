#include "stray/observation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "stray/errors.hpp"

namespace stray {

namespace {

constexpr double kConditionLimit = 1e10;
constexpr int kBranchRadius = 3;  // grid cells claimed by one Newton seed

// Admissible interval for a fan coordinate: the grid range widened by a few cells.
struct Range {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double v) const { return v >= lo && v <= hi; }
};

Range widen(const std::vector<double>& g) {
  if (g.size() < 2) return {};
  const auto [mn, mx] = std::minmax_element(g.begin(), g.end());
  const double cell = (*mx - *mn) / static_cast<double>(g.size() - 1);
  return {*mn - kBranchRadius * cell, *mx + kBranchRadius * cell};
}

double condition(const Eigen::Matrix2d& m) {
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(m);
  const auto& s = svd.singularValues();
  return s[1] > 0.0 ? s[0] / s[1] : std::numeric_limits<double>::infinity();
}

enum class NewtonOutcome { Converged, Outside, Diverged, Caustic };

struct NewtonResult {
  NewtonOutcome outcome = NewtonOutcome::Diverged;
  Arrival arrival;
};

// Spatial position of the member (mu, nu) at tau and the (mu, nu) block of J_r there.
struct Probe {
  Eigen::Vector2d pos;
  Eigen::Matrix2d jac;
};

std::optional<Probe> probe(const Fan& fan, double tau, double mu, double nu) {
  if (!(nu < tau)) return std::nullopt;
  RaySolution ray;
  try {
    ray = trace_member(fan, mu, nu, tau, false);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DomainExit || e.kind() == ErrorKind::CutoffCrossing) return std::nullopt;
    throw;
  }
  const JacobiFrame fr = jacobi_frame(ray, tau);
  const PhasePoint f = ray.at(tau).f;
  return Probe{Eigen::Vector2d(f.x, f.y), fr.jr.block<2, 2>(1, 1)};
}

NewtonResult newton(const Fan& fan, const Vec3& target, double mu, double nu, double scale, const Range& mr,
                    const Range& nr, const LocateOptions& opts) {
  const Eigen::Vector2d goal(target[1], target[2]);
  NewtonResult res;
  auto p = probe(fan, target[0], mu, nu);
  if (!p) {
    res.outcome = NewtonOutcome::Outside;
    return res;
  }
  double err = (p->pos - goal).norm();
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (err <= opts.tol * scale) {
      res.outcome = NewtonOutcome::Converged;
      res.arrival = {Vec3(target[0], mu, nu), 0, err, it};
      return res;
    }
    if (condition(p->jac) > kConditionLimit) {
      res.outcome = NewtonOutcome::Caustic;
      return res;
    }
    const Eigen::Vector2d step = -p->jac.partialPivLu().solve(p->pos - goal);
    double lambda = 1.0;
    bool moved = false;
    for (int k = 0; k < 12; ++k, lambda *= 0.5) {
      const double m1 = mu + lambda * step[0], n1 = nu + lambda * step[1];
      if (!mr.contains(m1) || !nr.contains(n1)) continue;
      auto p1 = probe(fan, target[0], m1, n1);
      if (!p1) continue;
      const double e1 = (p1->pos - goal).norm();
      if (e1 < err || e1 <= opts.tol * scale) {
        mu = m1;
        nu = n1;
        p = p1;
        err = e1;
        moved = true;
        break;
      }
    }
    if (!moved) {
      const bool outside = !mr.contains(mu + step[0]) || !nr.contains(nu + step[1]);
      res.outcome = outside ? NewtonOutcome::Outside : NewtonOutcome::Diverged;
      res.arrival = {Vec3(target[0], mu, nu), 0, err, it};
      return res;
    }
  }
  res.outcome = err <= opts.tol * scale ? NewtonOutcome::Converged : NewtonOutcome::Diverged;
  res.arrival = {Vec3(target[0], mu, nu), 0, err, opts.max_iterations};
  return res;
}

}  // namespace

ObservationLine ObservationLine::fixed_point(double tau0, double x, double y) {
  return {[=](double rho) { return Vec3(tau0 + rho, x, y); }, [](double) { return Vec3(1.0, 0.0, 0.0); }};
}

ObservationLine ObservationLine::straight(const Vec3& origin, const Vec3& direction) {
  if (!(direction.norm() > 0.0)) throw Error(ErrorKind::Validation, "observation line direction vanishes");
  return {[=](double rho) { return Vec3(origin + rho * direction); }, [=](double) { return direction; }};
}

Fan trace_fan_grid(const Environment& env, int mode, const SourceSpec& src, std::vector<double> mu,
                   std::vector<double> nu, double tau_end, TraceOptions opts, int threads) {
  Fan fan;
  fan.env = &env;
  fan.mode = mode;
  fan.source = src;
  fan.mu = std::move(mu);
  fan.nu = std::move(nu);
  fan.tau_end = tau_end;
  opts.allow_truncation = true;
  fan.trace = opts;
  fan.rays = trace_fan(env, mode, initial_fan(env, mode, src, fan.mu, fan.nu), tau_end, opts, threads);
  return fan;
}

RaySolution trace_member(const Fan& fan, double mu, double nu, double tau_end, bool second_variation) {
  TraceOptions o = fan.trace;
  o.second_variation = second_variation;
  o.knots.clear();
  o.knot_count = 1;
  o.allow_truncation = false;
  o.detect_caustics = false;
  const auto init = initial_fan(*fan.env, fan.mode, fan.source, {mu}, {nu});
  return trace_ray(*fan.env, fan.mode, init[0], tau_end, o);
}

std::vector<Arrival> locate_arrivals(const Fan& fan, const Vec3& target, const LocateOptions& opts) {
  const std::size_t nm = fan.mu.size(), nn = fan.nu.size();
  if (nm == 0 || nn == 0 || fan.rays.size() != nm * nn) throw Error(ErrorKind::Validation, "fan is empty or incomplete");
  const double range = std::hypot(target[1] - fan.source.x0, target[2] - fan.source.y0);
  const double scale = std::max(fan.source.start_radius, range);

  // Distance of every fan sample to the target at the target time.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(nm * nn, inf);
  bool any = false;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const RaySolution& ray = fan.rays[k];
    if (ray.size() == 0 || target[0] < ray.tau_begin() || target[0] > ray.tau_end()) continue;
    const PhasePoint f = ray.at(target[0]).f;
    dist[k] = std::hypot(f.x - target[1], f.y - target[2]);
    any = true;
  }
  if (!any) throw Error(ErrorKind::NoArrival, "no fan ray is alive at tau = " + std::to_string(target[0]));

  // Seeds: local minima of the distance, each claiming the cells around it.
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    if (dist[k] == inf) continue;
    const long i = static_cast<long>(k / nn), j = static_cast<long>(k % nn);
    bool minimum = true;
    for (long di = -1; di <= 1 && minimum; ++di)
      for (long dj = -1; dj <= 1; ++dj) {
        const long a = i + di, b = j + dj;
        if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= static_cast<long>(nm) || b >= static_cast<long>(nn)) continue;
        if (dist[a * nn + b] < dist[k]) {
          minimum = false;
          break;
        }
      }
    if (minimum) order.push_back(k);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

  const Range mr = widen(fan.mu), nr = widen(fan.nu);
  std::vector<std::size_t> used;
  std::vector<Arrival> found;
  bool caustic = false, diverged = false;
  for (std::size_t k : order) {
    if (static_cast<int>(used.size()) >= opts.max_branches) break;
    const long i = static_cast<long>(k / nn), j = static_cast<long>(k % nn);
    const bool claimed = std::any_of(used.begin(), used.end(), [&](std::size_t u) {
      return std::abs(static_cast<long>(u / nn) - i) <= kBranchRadius &&
             std::abs(static_cast<long>(u % nn) - j) <= kBranchRadius;
    });
    if (claimed) continue;
    used.push_back(k);
    const NewtonResult r = newton(fan, target, fan.mu[i], fan.nu[j], scale, mr, nr, opts);
    switch (r.outcome) {
      case NewtonOutcome::Converged: {
        const bool dup = std::any_of(found.begin(), found.end(), [&](const Arrival& a) {
          return (a.r - r.arrival.r).lpNorm<Eigen::Infinity>() <= opts.dedup;
        });
        if (!dup) found.push_back(r.arrival);
        break;
      }
      case NewtonOutcome::Caustic:
        caustic = true;
        break;
      case NewtonOutcome::Diverged:
        diverged = true;
        break;
      case NewtonOutcome::Outside:
        break;
    }
  }

  if (found.empty()) {
    const std::size_t best = static_cast<std::size_t>(std::min_element(dist.begin(), dist.end()) - dist.begin());
    const std::string diag = "nearest fan sample mu=" + std::to_string(fan.mu[best / nn]) +
                             ", nu=" + std::to_string(fan.nu[best % nn]) + " at distance " +
                             std::to_string(dist[best]) + " m";
    if (caustic) throw Error(ErrorKind::CausticAmbiguity, "Jacobi matrix singular during arrival search; " + diag);
    if (diverged) throw Error(ErrorKind::NewtonDivergence, "arrival search did not converge; " + diag);
    throw Error(ErrorKind::NoArrival, "target lies outside the fan footprint; " + diag);
  }
  std::sort(found.begin(), found.end(), [](const Arrival& a, const Arrival& b) {
    return a.r[1] != b.r[1] ? a.r[1] < b.r[1] : a.r[2] < b.r[2];
  });
  for (std::size_t b = 0; b < found.size(); ++b) found[b].branch = static_cast<int>(b);
  return found;
}

ObservationRecord observe(const Fan& fan, const ObservationLine& line, double rho, const Vec3& r, int branch) {
  const RaySolution ray = trace_member(fan, r[1], r[2], r[0], true);
  const FieldState s = field_state(ray, r[0]);

  ObservationRecord rec;
  rec.rho = rho;
  rec.r = r;
  rec.branch = branch;
  rec.point = line.point(rho);
  rec.w_obs = s.w;
  rec.k_obs = s.k;
  rec.amplitude = s.amplitude;
  rec.phase = s.phase;
  rec.emission_time = r[2];
  rec.det = s.det;
  rec.caustic_band = s.in_caustic_band;

  const Vec3 dr = s.frame.jr.partialPivLu().solve(line.derivative(rho));
  rec.df_drho = s.frame.jf * dr;

  rec.front_defined = false;
  rec.front_angle = rec.front_angle_spacetime = std::numeric_limits<double>::quiet_NaN();
  if (!s.in_caustic_band) {
    try {
      const Vec3 ga = space_time_gradient(s.frame, s.grad_amplitude);
      const Vec3 gp = space_time_gradient(s.frame, s.grad_phase);
      rec.front_angle = front_angle(ga.tail<2>(), gp.tail<2>());
      rec.front_angle_spacetime = front_angle(ga, gp);
      rec.front_defined = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroGradient && e.kind() != ErrorKind::RankLoss) throw;
    }
  }
  return rec;
}

const ObservationRecord& ObservationSeries::at(double rho) const {
  for (const auto& r : records)
    if (std::abs(r.rho - rho) <= 1e-12 * std::max(1.0, std::abs(rho))) return r;
  throw Error(ErrorKind::Validation, "no observation knot at rho = " + std::to_string(rho));
}

ObservationSeries evolve_along_line(const Fan& fan, const ObservationLine& line, const Arrival& seed,
                                    double rho_begin, double rho_end, const EvolveOptions& opts) {
  if (!(rho_end > rho_begin)) throw Error(ErrorKind::Validation, "empty observation span");
  std::vector<double> knots;
  if (opts.knots.empty()) {
    const int n = std::max(1, opts.knot_count);
    for (int i = 1; i <= n; ++i) knots.push_back(rho_begin + (rho_end - rho_begin) * i / n);
  } else {
    for (double k : opts.knots)
      if (k > rho_begin && k <= rho_end) knots.push_back(k);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    if (knots.empty() || knots.back() < rho_end) knots.push_back(rho_end);
  }

  auto rhs = [&](double rho, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    const RaySolution ray = trace_member(fan, y[1], y[2], y[0], false);
    const JacobiFrame f = jacobi_frame(ray, y[0]);
    const Vec3 sv = f.jr.jacobiSvd().singularValues();
    if (!(sv[2] * kConditionLimit > sv[0]))
      throw Error(ErrorKind::CausticEncounter, "observation line meets a caustic near rho = " + std::to_string(rho));
    dy = f.jr.partialPivLu().solve(line.derivative(rho));
  };

  ObservationSeries out;
  out.branch = seed.branch;
  out.last_valid_rho = rho_begin;
  std::size_t next = 0;
  auto observer = [&](double rho, const Eigen::VectorXd& y, const Eigen::VectorXd&) {
    out.last_valid_rho = rho;
    while (next < knots.size() && knots[next] < rho) ++next;
    if (rho == rho_begin || (next < knots.size() && knots[next] == rho))
      out.records.push_back(observe(fan, line, rho, Vec3(y), seed.branch));
    return true;
  };

  DormandPrince dp(rhs, opts.ode);
  try {
    dp.integrate(rho_begin, Eigen::VectorXd(seed.r), knots, observer);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::CausticEncounter) throw;
    out.stopped_at_caustic = true;
    out.stop_reason = e.what();
  }
  return out;
}

TimeCompression time_compression(const ObservationRecord& a, const ObservationRecord& b) {
  if (a.branch != b.branch) throw Error(ErrorKind::BranchMismatch, "records belong to different branches");
  if (a.rho == b.rho) throw Error(ErrorKind::Validation, "time compression needs two distinct knots");
  TimeCompression t;
  t.dtau = a.r[0] - b.r[0];
  t.dtau0 = a.emission_time - b.emission_time;
  if (t.dtau0 == 0.0) throw Error(ErrorKind::Validation, "emission times coincide; compression ratio undefined");
  t.ratio = t.dtau / t.dtau0;
  return t;
}

TimeCompression time_compression(const ObservationSeries& series, double rho, double rho_prime) {
  return time_compression(series.at(rho), series.at(rho_prime));
}

double front_angle(const Eigen::VectorXd& grad_amplitude, const Eigen::VectorXd& grad_phase) {
  if (grad_amplitude.size() != grad_phase.size()) throw Error(ErrorKind::Validation, "gradient sizes differ");
  const double na = grad_amplitude.norm(), np = grad_phase.norm();
  if (!(na > 0.0) || !(np > 0.0)) throw Error(ErrorKind::ZeroGradient, "front undefined where the gradient vanishes");
  const Eigen::VectorXd a = grad_amplitude / na;
  Eigen::VectorXd b = grad_phase / np;
  if (a.dot(b) < 0.0) b = -b;
  return 2.0 * std::atan2((a - b).norm(), (a + b).norm());
}

std::complex<double> coherent_sum(const std::vector<ObservationRecord>& records) {
  std::complex<double> sum = 0.0;
  for (const auto& r : records) sum += std::polar(r.amplitude, r.phase);
  return sum;
}

}  // namespace stray
