#pragma once

// Eikonal Hamiltonian H = kx^2 + ky^2 - q(w, x, y)^2 over the phase space
// f = (tau, x, y, w, kx, ky).
//
// Orientation: w > 0 and group speed v = 1/(dq/dw) > 0. The canonical momentum
// conjugate to tau is -w, which gives the structure matrix
//
//   Jf = [[0, S], [-S, 0]],  S = diag(-1, 1, 1),
//
// and with sigma = v/(2q) the field sigma*Jf*grad(H) is exactly
// d/dtau (tau, x, y, w, kx, ky) = (1, v k/q, 0, v grad(q)).

#include <array>

#include <Eigen/Dense>

#include "stray/environment.hpp"
#include "stray/jet.hpp"

namespace stray {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
/// Rank-3 tensor over phase space; t[i](j, k) holds component (i, j, k).
using Tensor6 = std::array<Mat6, 6>;

enum Slot : int { kTau = 0, kX = 1, kY = 2, kW = 3, kKx = 4, kKy = 5 };

struct PhasePoint {
  double tau = 0.0, x = 0.0, y = 0.0, w = 0.0, kx = 0.0, ky = 0.0;

  Vec6 vec() const {
    Vec6 v;
    v << tau, x, y, w, kx, ky;
    return v;
  }
  static PhasePoint from(const Vec6& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }
};

/// The constant structure matrix Jf (antisymmetric, Jf^2 = -I).
const Mat6& structure_matrix();

double hamiltonian(const Environment& env, int mode, const PhasePoint& f);

struct HamiltonianDerivatives {
  double value = 0.0;
  Vec6 grad = Vec6::Zero();
  Mat6 hess = Mat6::Zero();
  Tensor6 third{};
};

/// H and its derivatives through `max_order` (1..3); tau slots are identically zero.
HamiltonianDerivatives derivatives(const Environment& env, int mode, const PhasePoint& f, int max_order = 3);

/// v = 1/(dq/dw); DegenerateGroupSpeed when dq/dw < 1e-12.
double group_speed(const Environment& env, int mode, const PhasePoint& f);

struct SigmaDerivatives {
  double value = 0.0;
  Vec6 grad = Vec6::Zero();
  Mat6 hess = Mat6::Zero();
};

/// sigma = v/(2q) = 1/(2 q dq/dw) and derivatives through `max_order` (0..2).
SigmaDerivatives sigma(const Environment& env, int mode, const PhasePoint& f, int max_order = 2);

/// Everything the ray tracer needs at one phase point, from a single dispersion evaluation.
struct LocalModel {
  Jet<3> q;  // q(w, x, y)
  HamiltonianDerivatives h;
  SigmaDerivatives s;
  double v = 0.0;
};

LocalModel local_model(const Environment& env, int mode, const PhasePoint& f, int max_order = 3);
LocalModel local_model(const Jet<3>& q, const PhasePoint& f, int max_order = 3);

/// The tau-parameterized field g(f) = sigma Jf grad(H) = (1, k/(q q_w), 0, grad(q)/q_w).
Vec6 tau_field(const LocalModel& m);

/// Its Jacobian M = Dg = Jf (sigma Hess(H) + grad(H) grad(sigma)^T).
Mat6 tau_field_jacobian(const LocalModel& m);

/// Second derivative tensor D2g (symmetric in the last two indices); needs max_order 3.
Tensor6 tau_field_hessian(const LocalModel& m);

}  // namespace stray
