#pragma once

// Space-time rays of one adiabatic mode, with first and second variations.
//
// Rays are integrated in the elapsed time t = tau - tau0 along
//
//   df/dt = g(f) = sigma Jf grad(H),   dP/dt = Dg P,   dPhi/dt = Dg Phi + D2g[P, P],
//
// where P = dF/df0 is the propagator and Phi = d2F/df0^2 the second-variation
// tensor of the flow F(t; f0). The state also carries the phase integral
// int q v dt, the arclength s, and the gradients of both with respect to f0.
//
// Ray coordinates are r = (tau, mu, nu): absolute time, launch azimuth mu, and
// the modulation parameter nu. Emission follows tau0(nu) = nu.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stray/environment.hpp"
#include "stray/hamiltonian.hpp"
#include "stray/ode.hpp"

namespace stray {

using Mat63 = Eigen::Matrix<double, 6, 3>;

/// Point source on a launch circle with a linear frequency law w0(nu) = w_center + chirp_slope * nu.
struct SourceSpec {
  double x0 = 0.0, y0 = 0.0;
  double start_radius = 100.0;  // s_start (m)
  double w_center = 0.0;        // 1/m
  double chirp_slope = 0.0;     // 1/m^2
  double amplitude = 1.0;
  /// Gaussian envelope width in nu (m); 0 disables the envelope.
  double envelope_width = 0.0;
  /// nu at which the initial phase is zero and the envelope peaks.
  double nu_center = 0.0;

  double frequency(double nu) const { return w_center + chirp_slope * nu; }
};

struct InitialState {
  int mu_index = 0, nu_index = 0;
  double mu = 0.0, nu = 0.0;
  PhasePoint f0;
  /// Jacobi matrix of f0 in ray coordinates (tau, mu, nu).
  Mat63 jacobi;
  /// The same in (t, mu, nu): columns g(f0), df0/dmu, df0/dnu.
  Mat63 jacobi_t;
  /// Second derivatives of f0: d2/dmu2, d2/dmu dnu, d2/dnu2.
  std::array<Vec6, 3> hess_f0{};
  double phase = 0.0;
  /// d(phase)/d(mu, nu) on the launch circle.
  Eigen::Vector2d phase_grad = Eigen::Vector2d::Zero();
  double amplitude = 1.0;
  Eigen::Vector2d log_amplitude_grad = Eigen::Vector2d::Zero();
  double start_radius = 0.0;
};

/// Initial states for every (mu_i, nu_j), ordered by (mu index, nu index).
/// Errors: RankDeficientFan, NoTrappedModes.
std::vector<InitialState> initial_fan(const Environment& env, int mode, const SourceSpec& src,
                                      const std::vector<double>& mu, const std::vector<double>& nu);

/// A bare phase point as an initial state (identity Jacobi data); for probing the flow.
InitialState point_state(const Environment& env, int mode, const PhasePoint& f0);

struct TraceOptions {
  OdeOptions ode;
  /// Absolute tau of the output knots; empty means `knot_count` uniform knots up to tau_end.
  std::vector<double> knots;
  int knot_count = 100;
  bool second_variation = true;
  bool detect_caustics = true;
  /// Return the part traced so far instead of throwing DomainExit or CutoffCrossing.
  bool allow_truncation = false;
  /// Rescale |k| to q at each knot.
  bool renormalize_on_shell = false;
};

struct CausticEvent {
  double tau = 0.0;
  int sign_before = 0, sign_after = 0;
};

/// Unpacked tracer state at one sample.
struct RayState {
  double t = 0.0;
  PhasePoint f;
  Mat6 P = Mat6::Identity();
  Tensor6 Phi{};
  double qv_integral = 0.0;
  double arclength = 0.0;
  Vec6 phase_grad_integral = Vec6::Zero();
  Vec6 arclength_grad_integral = Vec6::Zero();
};

inline constexpr int kStateSize = 272;

struct RaySolution {
  /// The environment the ray was traced in; it must outlive this object.
  const Environment* env = nullptr;
  int mode = 0;
  InitialState init;
  /// Every accepted integration point: elapsed t, packed state and its rate.
  std::vector<double> t;
  std::vector<Eigen::VectorXd> states, rates;
  std::vector<bool> is_knot;
  std::vector<double> hamiltonian;  // H at each sample
  std::vector<CausticEvent> caustics;
  double det_median = 0.0;  // median |det J_r| over the samples
  bool truncated = false;
  std::string truncation_reason;
  OdeStats stats;

  std::size_t size() const { return t.size(); }
  double tau(std::size_t i) const { return init.f0.tau + t[i]; }
  double tau_begin() const { return tau(0); }
  double tau_end() const { return tau(t.size() - 1); }
  RayState sample(std::size_t i) const;
  std::vector<std::size_t> knot_indices() const;
  /// Packed state at absolute tau: exact at samples, cubic Hermite in between. OutOfSpan outside.
  Eigen::VectorXd state_at(double tau) const;
  RayState at(double tau) const;
};

RayState unpack(double t, const Eigen::VectorXd& y);

/// Trace from `init` until absolute time tau_end.
RaySolution trace_ray(const Environment& env, int mode, const InitialState& init, double tau_end,
                      const TraceOptions& opts = {});

/// Trace every initial state, in parallel over `threads` workers; order follows `inits`.
std::vector<RaySolution> trace_fan(const Environment& env, int mode, const std::vector<InitialState>& inits,
                                   double tau_end, const TraceOptions& opts = {}, int threads = 1);

/// P(tau) * df0. OutOfSpan when tau lies outside the ray.
Vec6 propagate_variation(const RaySolution& ray, double tau, const Vec6& df0);

/// Variation of the propagator for an initial phase-space shift: dP_ij = Phi_ijk df0_k.
Mat6 perturbed_propagator(const RaySolution& ray, double tau, const Vec6& df0);
/// The same for a shift of ray coordinates (tau, mu, nu), mapped through the initial Jacobi matrix.
Mat6 perturbed_propagator(const RaySolution& ray, double tau, const Eigen::Vector3d& dr);

/// Propagator of the affine-parameter system df/dxi = Jf grad(H), dP/dxi = Jf Hess(H) P.
struct AffineSample {
  double xi = 0.0;
  PhasePoint f;
  Mat6 P = Mat6::Identity();
};

/// Integrate the affine system from f0 until tau reaches tau_end, with `samples` output points.
std::vector<AffineSample> trace_affine(const Environment& env, int mode, const PhasePoint& f0, double tau_end,
                                       const OdeOptions& ode = {}, int samples = 100);

/// Symplectic defect ||P^T Jf P - Jf||_F.
double symplectic_defect(const Mat6& P);

}  // namespace stray
