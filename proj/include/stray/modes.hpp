#pragma once

// Trapped vertical modes of the depth-separated Sturm-Liouville problem
//
//   psi'' + n(z)^2 w^2 psi = q^2 psi,   psi(0) = 0,
//   psi continuous at z = h,  psi'(h-)/rho_w = psi'(h+)/rho_b,
//   psi -> 0 as z -> infinity (homogeneous bottom, psi ~ exp(-beta (z - h))).
//
// Modes are ordered by decreasing horizontal wavenumber q, mode l having l
// interior zeros in the water. The scalar product weights the water column by
// rho_b and the bottom by rho_w; this is the weight for which the interface
// condition makes the operator symmetric, so distinct modes are orthogonal
// and dq/dw = (w/q) <n^2 psi, psi> holds exactly.

#include <array>
#include <vector>

#include "stray/environment.hpp"
#include "stray/jet.hpp"

namespace stray {

struct ModeSolution {
  int index = 0;
  double w = 0.0;
  double x = 0.0, y = 0.0;
  double depth = 0.0;
  double q = 0.0;
  /// Water vertical wavenumber sqrt(n_w^2 w^2 - q^2); isovelocity water only, else 0.
  double gamma = 0.0;
  /// Bottom decay rate sqrt(q^2 - n_b^2 w^2).
  double beta = 0.0;
  /// Samples on a uniform grid over the water column [0, depth] (odd count, Simpson-ready).
  std::vector<double> z, psi, dpsi;
  /// Illustrative samples of the exponential tail in the bottom, down to depth + 5/beta.
  std::vector<double> z_tail, psi_tail;
};

/// Number of trapped modes at (w, x, y).
int mode_count(const Environment& env, double w, double x, double y);

/// Every trapped mode at (w, x, y), normalized and ordered by decreasing q, on a common grid.
/// Throws NoTrappedModes when the frequency is below the first cutoff.
std::vector<ModeSolution> solve_modes(const Environment& env, double w, double x, double y);

/// Mode l alone, on the same grid solve_modes would use.
ModeSolution solve_mode(const Environment& env, int l, double w, double x, double y);

/// Horizontal wavenumber of mode l for frequency w and local depth h (no eigenfunction).
double mode_wavenumber(const Environment& env, int l, double w, double depth);

/// Weighted scalar product of two sampled modes; GridMismatch if the grids differ.
double inner_product(const Environment& env, const ModeSolution& a, const ModeSolution& b);

/// <n^2 psi, psi> by quadrature.
double n2_product(const Environment& env, const ModeSolution& mode);
/// The same product through the identity (q^2 + <psi', psi'>)/w^2.
double n2_product_identity(const Environment& env, const ModeSolution& mode);

/// dq/dw from the Hellmann-Feynman identity (w/q) <n^2 psi, psi>.
double dq_dw(const Environment& env, const ModeSolution& mode);

/// q(w, x, y) of mode l as a degree-3 jet in (w, x, y).
///
/// Isovelocity water uses implicit differentiation of the closed-form
/// dispersion relation (exact to rounding). Other profiles use fourth-order
/// central differences of the shooting eigenvalue in (w, h), chained through
/// the bathymetry jet.
Jet<3> dispersion_jet(const Environment& env, int l, double w, double x, double y);

struct DispersionDerivatives {
  double q = 0.0;
  std::array<double, 3> grad{};                          // d/d(w, x, y)
  std::array<std::array<double, 3>, 3> hess{};
  std::array<std::array<std::array<double, 3>, 3>, 3> third{};
};

/// Partial derivatives of q with respect to (w, x, y) through `max_order` (1..3).
DispersionDerivatives dispersion_derivatives(const Environment& env, int l, double w, double x, double y,
                                             int max_order = 3);

}  // namespace stray
