#pragma once

// Ray-field quantities along a traced ray: Jacobi matrices, amplitude, phase
// and their gradients.
//
// Computative gradients are taken with respect to the ray coordinates
// (tau, mu, nu). Observable gradients map them back onto phase space or onto
// space-time (tau, x, y). With the orientation used here (momentum -w
// conjugate to tau) the phase satisfies d(phase)/d(tau) = -w, so the
// space-time gradient of the phase is (-w, kx, ky).

#include <Eigen/Core>

#include "stray/raytrace.hpp"

namespace stray {

struct JacobiFrame {
  double tau = 0.0;
  /// dF/d(tau, mu, nu): 6x3.
  Mat63 jf = Mat63::Zero();
  /// Rows (tau, x, y) of jf.
  Mat3 jr = Mat3::Zero();
  /// Moore-Penrose left inverse of jf: 3x6.
  Eigen::Matrix<double, 3, 6> pinv = Eigen::Matrix<double, 3, 6>::Zero();
  double det = 0.0;  // signed det(jr)
  double D = 0.0;    // |det(jr)|
  /// Derivatives of jf with respect to each ray coordinate.
  std::array<Mat63, 3> djf{};
};

/// Errors: OutOfSpan; RankLoss when jf itself loses rank.
JacobiFrame jacobi_frame(const RaySolution& ray, double tau);

enum class Quantity { Tau, Arclength, Phase, Amplitude };

struct Amplitude {
  double value = 0.0;
  /// Inside the guard band |det| < 1e-6 * median |det| around a caustic; value is unreliable there.
  bool in_caustic_band = false;
};

struct FieldState {
  double tau = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double arclength = 0.0;
  double g = 0.0;        // q sqrt(1 + 1/v^2)
  double det = 0.0;      // signed det J_r
  double w = 0.0;
  Eigen::Vector2d k = Eigen::Vector2d::Zero();
  bool in_caustic_band = false;
  Vec3 grad_tau = Vec3::Zero(), grad_arclength = Vec3::Zero(), grad_phase = Vec3::Zero(),
       grad_amplitude = Vec3::Zero();
  JacobiFrame frame;
};

/// Every field quantity at tau in one pass.
FieldState field_state(const RaySolution& ray, double tau);

Amplitude amplitude(const RaySolution& ray, double tau);
double phase(const RaySolution& ray, double tau);

/// Gradient of a quantity with respect to (tau, mu, nu). CausticBand for the amplitude inside a guard band.
Vec3 computative_gradient(const RaySolution& ray, double tau, Quantity which);

/// Phase-space gradient (J+)^T grad_r F.
Vec6 observable_gradient(const JacobiFrame& frame, const Vec3& grad_r);

/// Space-time gradient over (tau, x, y): J_r^{-T} grad_r F. RankLoss at caustics.
Vec3 space_time_gradient(const JacobiFrame& frame, const Vec3& grad_r);

/// A^2 g |det J_r|, constant along a ray.
double transport_invariant(const RaySolution& ray, double tau);

}  // namespace stray
