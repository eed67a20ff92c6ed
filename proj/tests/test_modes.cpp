#include <doctest.h>

#include <cmath>

#include "stray/errors.hpp"
#include "stray/modes.hpp"
#include "support.hpp"

using namespace stray;
using test::omega;
using test::rel;

namespace {

test::PekerisOracle oracle(const Environment& env, double w, double h) {
  return {1.0, env.n_bottom(), env.water_density(), env.bottom_density(), w, h};
}

ErrorKind error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Parse;
}

}  // namespace

TEST_CASE("Pekeris eigenvalues match bisection on the characteristic function") {
  const Environment env = test::pekeris();
  const double w = omega(100.0);
  const auto modes = solve_modes(env, w, 0.0, 0.0);
  const auto ref = oracle(env, w, 100.0).roots(10000);
  REQUIRE(ref.size() == 6);
  REQUIRE(modes.size() == 6);
  for (std::size_t l = 0; l < modes.size(); ++l) {
    CHECK(rel(modes[l].q, ref[l]) <= 1e-10);
    CHECK(modes[l].index == static_cast<int>(l));
    CHECK(modes[l].q > env.n_bottom() * w);
    CHECK(modes[l].q < w);
    if (l > 0) CHECK(modes[l].q < modes[l - 1].q);
  }
}

TEST_CASE("residual of the characteristic function at polished roots") {
  test::Gen gen(101);
  for (int trial = 0; trial < 20; ++trial) {
    const double h = gen.uniform(30.0, 300.0);
    const double w = omega(gen.uniform(20.0, 400.0));
    const Environment env = test::pekeris(h);
    const auto o = oracle(env, w, h);
    // Scale of F near a root: its magnitude over the window plus its variation across q itself,
    // which bounds what any correctly rounded root can achieve.
    double scale = 0.0;
    for (int i = 1; i < 4096; ++i) scale = std::max(scale, std::abs(o.F(env.n_bottom() * w + i * (1 - env.n_bottom()) * w / 4096)));
    const int m = mode_count(env, w, 0.0, 0.0);
    for (int l = 0; l < m; ++l) {
      const double q = mode_wavenumber(env, l, w, h);
      const double slope = std::abs(o.F(q * (1 + 1e-9)) - o.F(q * (1 - 1e-9))) / 2e-9;
      CHECK(std::abs(o.F(q)) <= 1e-12 * (scale + slope));
    }
  }
}

TEST_CASE("mode count agrees with a sign-change scan for random waveguides") {
  test::Gen gen(202);
  for (int trial = 0; trial < 50; ++trial) {
    const double h = gen.uniform(20.0, 250.0);
    const double w = omega(gen.uniform(5.0, 300.0));
    const Environment env = test::pekeris(h);
    const int scan = static_cast<int>(oracle(env, w, h).brackets(4096).size());
    CHECK(mode_count(env, w, 0.0, 0.0) == scan);
  }
}

TEST_CASE("rigid-bottom limit reproduces the analytic eigenvalues") {
  const Environment env = test::pekeris(100.0, 1000.0, 1000.0 * 1e12);
  const double w = omega(100.0);
  for (int l = 0; l <= 3; ++l) {
    const ModeSolution m = solve_mode(env, l, w, 0.0, 0.0);
    const double g = (2 * l + 1) * M_PI / 200.0;
    const double q = std::sqrt(w * w - g * g);
    CHECK(rel(m.q, q) <= 1e-6);
    CHECK(std::abs(dq_dw(env, m) - w / q) <= 1e-8 * (w / q));
  }
}

TEST_CASE("below the first cutoff there are no trapped modes") {
  const Environment env = test::pekeris();
  CHECK(oracle(env, omega(1.0), 100.0).brackets(10000).empty());
  CHECK(error_of([&] { solve_modes(env, omega(1.0), 0.0, 0.0); }) == ErrorKind::NoTrappedModes);
  CHECK(mode_count(env, omega(1.0), 0.0, 0.0) == 0);
}

TEST_CASE("modes are orthonormal under the weighted product") {
  for (double f : {50.0, 100.0, 250.0}) {
    const Environment env = test::pekeris();
    const auto modes = solve_modes(env, omega(f), 0.0, 0.0);
    for (std::size_t a = 0; a < modes.size(); ++a)
      for (std::size_t b = a; b < modes.size(); ++b) {
        const double p = inner_product(env, modes[a], modes[b]);
        CHECK(std::abs(p - (a == b ? 1.0 : 0.0)) <= 1e-8);
      }
  }
}

TEST_CASE("boundary behaviour of the sampled eigenfunctions") {
  const Environment env = test::pekeris();
  for (const auto& m : solve_modes(env, omega(100.0), 0.0, 0.0)) {
    CHECK(m.psi.front() == 0.0);
    CHECK(m.z.back() == m.depth);
    CHECK(m.z_tail.front() == m.depth);
    CHECK(m.psi_tail.front() == m.psi.back());
    CHECK(m.z_tail.back() == doctest::Approx(m.depth + 5.0 / m.beta));
    const double below = -m.beta * m.psi.back();
    CHECK(std::abs(m.dpsi.back() / env.water_density() - below / env.bottom_density()) <=
          1e-10 * std::abs(m.dpsi.front()) / env.water_density());
    // At least 200 samples per shortest vertical wavelength.
    CHECK(m.z[1] - m.z[0] <= 2.0 * M_PI / m.w / 200.0 + 1e-15);
  }
}

TEST_CASE("scalar product is bilinear in the densities and checks grids") {
  const Environment env = test::pekeris();
  const Environment doubled = test::pekeris(100.0, 2000.0, 3000.0);
  const auto modes = solve_modes(env, omega(100.0), 0.0, 0.0);
  CHECK(inner_product(doubled, modes[1], modes[1]) == doctest::Approx(2.0 * inner_product(env, modes[1], modes[1])));
  CHECK(inner_product(doubled, modes[0], modes[2]) == doctest::Approx(2.0 * inner_product(env, modes[0], modes[2])).scale(1.0));
  const ModeSolution other = solve_mode(env, 0, omega(130.0), 0.0, 0.0);
  CHECK(error_of([&] { inner_product(env, modes[0], other); }) == ErrorKind::GridMismatch);
  // A single mode is sampled on the grid of the full set.
  CHECK(std::abs(inner_product(env, solve_mode(env, 3, omega(100.0), 0.0, 0.0), modes[3]) - 1.0) <= 1e-12);
}

TEST_CASE("Hellmann-Feynman group slowness matches finite differences of the eigenvalue") {
  const Environment env = test::pekeris();
  for (int i = 0; i < 10; ++i) {
    const double w = omega(40.0 + 30.0 * i);
    const auto modes = solve_modes(env, w, 0.0, 0.0);
    for (const auto& m : modes) {
      const double dw = 1e-6 * w;
      const double fd = (mode_wavenumber(env, m.index, w + dw, 100.0) - mode_wavenumber(env, m.index, w - dw, 100.0)) / (2 * dw);
      const double hf = dq_dw(env, m);
      CHECK(std::abs(hf - fd) <= 1e-6 * std::abs(hf));
      CHECK(hf > 0.0);
      CHECK(hf < 1.0 / env.n_bottom());
      CHECK(std::abs(n2_product(env, m) - n2_product_identity(env, m)) <= 1e-8);
    }
  }
}

TEST_CASE("group slowness tends to the water index for deep high-frequency modes") {
  const Environment env = test::pekeris();
  const ModeSolution m = solve_mode(env, 0, omega(3000.0), 0.0, 0.0);
  CHECK(std::abs(dq_dw(env, m) - 1.0) < 1e-3);
}

TEST_CASE("dispersion derivatives on range-independent and wedge waveguides") {
  const double w = omega(100.0);
  SUBCASE("flat bottom has no horizontal derivatives") {
    const Environment env = test::pekeris();
    for (int l = 0; l < 6; ++l) {
      const auto d = dispersion_derivatives(env, l, w, 250.0, -40.0);
      for (int a = 1; a < 3; ++a) {
        CHECK(d.grad[a] == 0.0);
        for (int b = 0; b < 3; ++b) {
          CHECK(d.hess[a][b] == 0.0);
          for (int c = 0; c < 3; ++c) CHECK(d.third[a][b][c] == 0.0);
        }
      }
      CHECK(rel(d.grad[0], dq_dw(env, solve_mode(env, l, w, 0.0, 0.0))) <= 1e-8);
    }
  }
  SUBCASE("wedge derivatives match nested central differences") {
    const Environment env = test::wedge(100.0, 0.002, 0.001);
    const double x = 3000.0, y = -1000.0;
    auto q = [&](int l, double ww, double xx, double yy) {
      return mode_wavenumber(env, l, ww, env.depth_at(xx, yy));
    };
    for (int l = 0; l < mode_count(env, w, x, y); ++l) {
      const auto d = dispersion_derivatives(env, l, w, x, y);
      const double hx = 1.0, hw = 1e-5 * w;
      const double qx = (q(l, w, x + hx, y) - q(l, w, x - hx, y)) / (2 * hx);
      const double qy = (q(l, w, x, y + hx) - q(l, w, x, y - hx)) / (2 * hx);
      CHECK(rel(d.grad[1], qx) <= 1e-5);
      CHECK(rel(d.grad[2], qy) <= 1e-5);
      // Second and third derivatives: central differences with one Richardson step,
      // since the mode nearest cutoff varies on a short scale.
      auto richardson = [](auto&& fd, double step) { return (4.0 * fd(0.5 * step) - fd(step)) / 3.0; };
      const double qxx = richardson(
          [&](double s) { return (q(l, w, x + s, y) - 2 * q(l, w, x, y) + q(l, w, x - s, y)) / (s * s); }, 40.0);
      CHECK(rel(d.hess[1][1], qxx) <= 1e-5);
      const double qwx = richardson(
          [&](double s) {
            return (q(l, w + hw, x + s, y) - q(l, w + hw, x - s, y) - q(l, w - hw, x + s, y) + q(l, w - hw, x - s, y)) /
                   (4 * hw * s);
          },
          40.0);
      CHECK(rel(d.hess[0][1], qwx) <= 1e-5);
      // Third derivative against a difference of the analytic second derivative.
      const double qwxx = richardson(
          [&](double s) {
            return (dispersion_derivatives(env, l, w, x + s, y).hess[0][1] -
                    dispersion_derivatives(env, l, w, x - s, y).hess[0][1]) / (2 * s);
          },
          40.0);
      CHECK(rel(d.third[0][1][1], qwxx) <= 1e-5);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          CHECK(std::abs(d.hess[a][b] - d.hess[b][a]) <= 1e-8 * std::abs(d.hess[a][b]) + 1e-300);
          for (int c = 0; c < 3; ++c) CHECK(d.third[a][b][c] == doctest::Approx(d.third[c][a][b]).epsilon(1e-10));
        }
    }
  }
}

TEST_CASE("shooting on a constant profile given as nodes reproduces the closed form") {
  const Environment iso = test::pekeris();
  const Environment nodes(1500.0, {0.0, 60.0}, {1500.0, 1500.0}, 1700.0, 1000.0, 1500.0, Bathymetry::constant(100.0));
  const double w = omega(100.0);
  REQUIRE(mode_count(nodes, w, 0.0, 0.0) == 6);
  const auto a = solve_modes(iso, w, 0.0, 0.0);
  const auto b = solve_modes(nodes, w, 0.0, 0.0);
  for (std::size_t l = 0; l < a.size(); ++l) {
    CHECK(rel(b[l].q, a[l].q) <= 1e-10);
    CHECK(rel(dq_dw(nodes, b[l]), dq_dw(iso, a[l])) <= 1e-7);
    CHECK(std::abs(std::abs(inner_product(iso, a[l], b[l])) - 1.0) <= 1e-7);
  }
  const auto da = dispersion_derivatives(iso, 2, w, 0.0, 0.0);
  const auto db = dispersion_derivatives(nodes, 2, w, 0.0, 0.0);
  CHECK(rel(db.grad[0], da.grad[0]) <= 1e-8);
  CHECK(rel(db.hess[0][0], da.hess[0][0]) <= 1e-5);
  CHECK(rel(db.third[0][0][0], da.third[0][0][0]) <= 1e-2);
}

TEST_CASE("refracting profile: orthonormality, monotone spectrum and Hellmann-Feynman") {
  const Environment env(1500.0, {0.0, 40.0, 90.0}, {1530.0, 1480.0, 1500.0}, 1750.0, 1000.0, 1700.0,
                        Bathymetry::wedge(100.0, 0.001, 0.0));
  const double w = omega(80.0);
  const auto modes = solve_modes(env, w, 0.0, 0.0);
  REQUIRE(modes.size() >= 3);
  for (std::size_t a = 0; a < modes.size(); ++a) {
    if (a > 0) CHECK(modes[a].q < modes[a - 1].q);
    for (std::size_t b = a; b < modes.size(); ++b)
      CHECK(std::abs(inner_product(env, modes[a], modes[b]) - (a == b ? 1.0 : 0.0)) <= 1e-6);
    const double dw = 1e-6 * w;
    const double fd = (mode_wavenumber(env, modes[a].index, w + dw, 100.0) -
                       mode_wavenumber(env, modes[a].index, w - dw, 100.0)) / (2 * dw);
    CHECK(rel(dq_dw(env, modes[a]), fd) <= 1e-5);
  }
  const auto d = dispersion_derivatives(env, 0, w, 0.0, 0.0);
  CHECK(rel(d.grad[1], d.grad[1]) == 0.0);
  const double qx = (mode_wavenumber(env, 0, w, env.depth_at(10.0, 0.0)) - mode_wavenumber(env, 0, w, env.depth_at(-10.0, 0.0))) / 20.0;
  CHECK(rel(d.grad[1], qx) <= 1e-5);
}
