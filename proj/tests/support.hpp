#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <cmath>
#include <random>
#include <string>

#include "stray/environment.hpp"

namespace stray::test {

inline const char* kPekerisToml = R"(
[units]
reference_speed = 1500.0

[medium]
water_speed = 1500.0
bottom_speed = 1700.0
water_density = 1000.0
bottom_density = 1500.0

[bathymetry]
kind = "constant"
depth = 100.0
)";

inline Environment pekeris(double depth = 100.0, double rho_w = 1000.0, double rho_b = 1500.0) {
  return Environment(1500.0, {0.0}, {1500.0}, 1700.0, rho_w, rho_b, Bathymetry::constant(depth));
}

inline Environment wedge(double depth = 100.0, double gx = 0.002, double gy = 0.0) {
  return Environment(1500.0, {0.0}, {1500.0}, 1700.0, 1000.0, 1500.0, Bathymetry::wedge(depth, gx, gy));
}

inline double omega(double f_hz, double c0 = 1500.0) { return 2.0 * M_PI * f_hz / c0; }

/// Seeded generator for hand-rolled property tests.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }
};

/// Pekeris characteristic function written straight from the boundary conditions.
struct PekerisOracle {
  double nw, nb, rw, rb, w, h;

  double F(double q) const {
    const double g = std::sqrt(nw * nw * w * w - q * q);
    const double b = std::sqrt(q * q - nb * nb * w * w);
    return g * std::cos(g * h) / rw + b * std::sin(g * h) / rb;
  }

  /// Brackets of sign changes over an n-point scan of the open trapped window, high q first.
  std::vector<std::pair<double, double>> brackets(int n) const {
    std::vector<std::pair<double, double>> out;
    const double lo = nb * w, hi = nw * w;
    double qa = hi - (hi - lo) / (n + 1), fa = F(qa);
    for (int i = 2; i <= n; ++i) {
      const double qb = hi - i * (hi - lo) / (n + 1);
      const double fb = F(qb);
      if ((fa < 0) != (fb < 0)) out.emplace_back(qb, qa);
      qa = qb;
      fa = fb;
    }
    return out;
  }

  double bisect(double a, double b) const {
    double fa = F(a);
    for (int i = 0; i < 200 && b - a > 0.0; ++i) {
      const double m = 0.5 * (a + b);
      if (m <= a || m >= b) break;
      const double fm = F(m);
      if ((fm < 0) == (fa < 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  }

  std::vector<double> roots(int n) const {
    std::vector<double> r;
    for (auto [a, b] : brackets(n)) r.push_back(bisect(a, b));
    return r;
  }
};

/// Group speed 1/(dq/dw) of mode l in the default Pekeris guide, from Richardson-extrapolated
/// central differences of bisected roots.
inline double pekeris_group_speed(int l, double w) {
  auto q = [&](double ww) {
    const PekerisOracle o{1.0, 1500.0 / 1700.0, 1000.0, 1500.0, ww, 100.0};
    return o.roots(20000)[l];
  };
  const double h = 1e-4 * w;
  const double d1 = (q(w + h) - q(w - h)) / (2 * h);
  const double d2 = (q(w + 2 * h) - q(w - 2 * h)) / (4 * h);
  return 1.0 / ((4 * d1 - d2) / 3.0);
}

/// Emission parameter nu of the mode-l ray that covers range R (from a launch circle of radius s0)
/// by time tau, for the linear law w0(nu) = w_c + slope nu: nu + (R - s0)/v(w0(nu)) = tau.
inline double pekeris_arrival_nu(int l, double w_c, double slope, double s0, double R, double tau) {
  auto f = [&](double nu) { return nu + (R - s0) / pekeris_group_speed(l, w_c + slope * nu) - tau; };
  double a = tau - 1.4 * R, b = tau - 0.8 * R;
  double fa = f(a);
  for (int i = 0; i < 80; ++i) {
    const double m = 0.5 * (a + b), fm = f(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace stray::test
