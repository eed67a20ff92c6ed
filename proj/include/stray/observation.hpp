#pragma once

// Observables on a space-time observation line.
//
// An observation line is a curve rhat(rho) in (tau, x, y). The rays arriving on
// it are found by Newton iteration on the ray coordinates r = (tau, mu, nu) and
// then followed along the line by integrating dr/drho = J_r^{-1} drhat/drho.

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stray/field.hpp"

namespace stray {

struct ObservationLine {
  std::function<Vec3(double)> point;       // rhat(rho)
  std::function<Vec3(double)> derivative;  // drhat/drho

  /// The line (tau0 + rho, x, y) through a fixed spatial point.
  static ObservationLine fixed_point(double tau0, double x, double y);
  /// A straight space-time segment rhat(rho) = origin + rho * direction.
  static ObservationLine straight(const Vec3& origin, const Vec3& direction);
};

/// A traced fan of rays on a (mu, nu) grid, mu-major.
struct Fan {
  const Environment* env = nullptr;
  int mode = 0;
  SourceSpec source;
  std::vector<double> mu, nu;
  TraceOptions trace;
  double tau_end = 0.0;
  std::vector<RaySolution> rays;

  const RaySolution& ray(std::size_t i, std::size_t j) const { return rays[i * nu.size() + j]; }
};

/// Trace the full grid. Rays that leave the domain or cross cutoff are kept truncated.
Fan trace_fan_grid(const Environment& env, int mode, const SourceSpec& src, std::vector<double> mu,
                   std::vector<double> nu, double tau_end, TraceOptions opts = {}, int threads = 1);

/// Trace a single ray of the fan family at arbitrary (mu, nu) up to tau_end.
RaySolution trace_member(const Fan& fan, double mu, double nu, double tau_end, bool second_variation = true);

struct Arrival {
  Vec3 r = Vec3::Zero();  // (tau, mu, nu)
  int branch = 0;
  double residual = 0.0;  // final |rhat(r) - target|
  int iterations = 0;
};

struct LocateOptions {
  /// Convergence when |rhat(r) - target| <= tol * scale, scale = max(start radius, range of target).
  double tol = 1e-9;
  int max_iterations = 40;
  /// Converged triples closer than this in max norm are merged.
  double dedup = 1e-6;
  int max_branches = 8;
};

/// Every branch of the fan arriving at the space-time point target = (tau, x, y).
/// Errors: NoArrival, NewtonDivergence, CausticAmbiguity.
std::vector<Arrival> locate_arrivals(const Fan& fan, const Vec3& target, const LocateOptions& opts = {});

struct ObservationRecord {
  double rho = 0.0;
  Vec3 r = Vec3::Zero();  // arriving ray coordinates (tau, mu, nu)
  int branch = 0;
  Vec3 point = Vec3::Zero();  // rhat(rho)
  double w_obs = 0.0;
  Eigen::Vector2d k_obs = Eigen::Vector2d::Zero();
  double amplitude = 0.0;
  double phase = 0.0;
  double emission_time = 0.0;  // tau0(nu) = nu
  /// Angle between amplitude and phase fronts in the (x, y) plane, and in Euclidean (tau, x, y).
  double front_angle = 0.0;
  double front_angle_spacetime = 0.0;
  bool front_defined = true;
  bool caustic_band = false;
  double det = 0.0;
  Vec6 df_drho = Vec6::Zero();  // J_f J_r^{-1} drhat/drho
};

struct ObservationSeries {
  int branch = 0;
  std::vector<ObservationRecord> records;
  bool stopped_at_caustic = false;
  double last_valid_rho = 0.0;
  std::string stop_reason;

  /// The record at knot rho; Validation when rho is not a knot.
  const ObservationRecord& at(double rho) const;
};

struct EvolveOptions {
  OdeOptions ode{1e-10, 1e-12, 0.0, 0.0, 20000};
  /// Output knots strictly inside (rho_begin, rho_end]; empty means `knot_count` uniform knots.
  std::vector<double> knots;
  int knot_count = 20;
};

/// Follow `seed` (located at rho_begin) along the line up to rho_end.
/// A caustic stops the series (stopped_at_caustic); DomainExit propagates.
ObservationSeries evolve_along_line(const Fan& fan, const ObservationLine& line, const Arrival& seed,
                                    double rho_begin, double rho_end, const EvolveOptions& opts = {});

/// Full record for the ray with coordinates r observed at line parameter rho.
ObservationRecord observe(const Fan& fan, const ObservationLine& line, double rho, const Vec3& r, int branch = 0);

struct TimeCompression {
  double dtau = 0.0;   // tau(rho) - tau(rho')
  double dtau0 = 0.0;  // tau0(rho) - tau0(rho')
  double ratio = 0.0;  // dtau / dtau0
};

/// Errors: BranchMismatch, Validation when both records coincide or dtau0 vanishes.
TimeCompression time_compression(const ObservationRecord& a, const ObservationRecord& b);
TimeCompression time_compression(const ObservationSeries& series, double rho, double rho_prime);

/// Unoriented angle in [0, pi/2] between the level sets of two fields with the given gradients.
/// Errors: ZeroGradient.
double front_angle(const Eigen::VectorXd& grad_amplitude, const Eigen::VectorXd& grad_phase);

/// Sum of A exp(i phase) over branches.
std::complex<double> coherent_sum(const std::vector<ObservationRecord>& records);

}  // namespace stray
