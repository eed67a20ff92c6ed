#include <doctest.h>

#include <cmath>

#include "stray/errors.hpp"
#include "stray/field.hpp"
#include "stray/modes.hpp"
#include "support.hpp"

using namespace stray;
using namespace stray::test;

namespace {

TraceOptions tight() {
  TraceOptions o;
  o.ode.rtol = 1e-11;
  o.ode.atol = 1e-13;
  o.knot_count = 20;
  return o;
}

SourceSpec chirp_source() {
  SourceSpec s;
  s.w_center = omega(100.0);
  s.chirp_slope = 1e-6;
  s.start_radius = 100.0;
  s.envelope_width = 400.0;
  return s;
}

RaySolution trace_one(const Environment& env, int mode, const SourceSpec& src, double mu, double nu,
                      double tau_end, const TraceOptions& o = tight()) {
  const auto inits = initial_fan(env, mode, src, {mu}, {nu});
  return trace_ray(env, mode, inits[0], tau_end, o);
}

}  // namespace

TEST_CASE("transport invariant is constant along wedge rays") {
  const Environment env = wedge(100.0, 0.002, 0.001);
  const SourceSpec src = chirp_source();
  Gen gen(11);
  for (int trial = 0; trial < 4; ++trial) {
    const double mu = gen.uniform(-1.0, 1.0);
    const int mode = gen.integer(0, 2);
    const RaySolution ray = trace_one(env, mode, src, mu, 0.0, 20000.0);
    const double ref = transport_invariant(ray, ray.tau_begin());
    for (std::size_t i : ray.knot_indices()) CHECK(rel(transport_invariant(ray, ray.tau(i)), ref) < 1e-8);
  }
}

TEST_CASE("amplitude follows cylindrical spreading in a flat waveguide") {
  const Environment env = pekeris();
  SourceSpec src = chirp_source();
  src.envelope_width = 0.0;
  src.chirp_slope = 0.0;
  src.amplitude = 2.5;
  const RaySolution ray = trace_one(env, 1, src, 0.4, 0.0, 30000.0);
  for (std::size_t i : ray.knot_indices()) {
    const FieldState s = field_state(ray, ray.tau(i));
    CHECK(rel(s.amplitude, src.amplitude * std::sqrt(src.start_radius / s.arclength)) < 1e-8);
    CHECK_FALSE(s.in_caustic_band);
  }
}

TEST_CASE("space-time phase gradient recovers (-w, kx, ky)") {
  const Environment env = wedge(80.0, 0.0015, -0.0005);
  const SourceSpec src = chirp_source();
  for (double nu : {-500.0, 0.0, 700.0}) {
    const RaySolution ray = trace_one(env, 0, src, 0.7, nu, nu + 15000.0);
    for (std::size_t i : ray.knot_indices()) {
      const FieldState s = field_state(ray, ray.tau(i));
      const Vec3 g = space_time_gradient(s.frame, s.grad_phase);
      const double scale = std::abs(s.w) + s.k.norm();
      CHECK(std::abs(g[0] + s.w) < 1e-8 * scale);
      CHECK(std::abs(g[1] - s.k[0]) < 1e-8 * scale);
      CHECK(std::abs(g[2] - s.k[1]) < 1e-8 * scale);
      // tau itself has space-time gradient (1, 0, 0).
      const Vec3 gt = space_time_gradient(s.frame, s.grad_tau);
      CHECK((gt - Vec3(1, 0, 0)).norm() < 1e-10);
    }
  }
}

TEST_CASE("pseudo-inverse is a left inverse of the Jacobi matrix") {
  const Environment env = wedge();
  const RaySolution ray = trace_one(env, 0, chirp_source(), 0.2, 0.0, 10000.0);
  for (std::size_t i : ray.knot_indices()) {
    const JacobiFrame f = jacobi_frame(ray, ray.tau(i));
    CHECK((f.pinv * f.jf - Mat3::Identity()).norm() < 1e-10);
    // The observable gradient of tau reproduces the unit tau direction through J.
    const Vec6 o = observable_gradient(f, Vec3(1, 0, 0));
    CHECK(std::abs(o.dot(f.jf.col(0)) - 1.0) < 1e-10);
  }
}

TEST_CASE("computative gradients match finite differences across the fan") {
  const Environment env = wedge(100.0, 0.002, 0.0005);
  const SourceSpec src = chirp_source();
  const double mu = 0.5, nu = 100.0, tau = 12000.0;
  const RaySolution ray = trace_one(env, 0, src, mu, nu, tau + 100.0);
  const FieldState s = field_state(ray, tau);

  auto at = [&](double m, double n, double t) {
    return field_state(trace_one(env, 0, src, m, n, tau + 100.0), t);
  };
  // Fourth-order central differences in each ray coordinate.
  const double hs[3] = {2.0, 1e-4, 2.0};
  for (int a = 0; a < 3; ++a) {
    std::array<FieldState, 4> p;
    const int offs[4] = {-2, -1, 1, 2};
    for (int k = 0; k < 4; ++k) {
      const double d = offs[k] * hs[a];
      p[k] = a == 0 ? field_state(ray, tau + d) : a == 1 ? at(mu + d, nu, tau) : at(mu, nu + d, tau);
    }
    auto fd = [&](auto get) {
      return (get(p[0]) - 8.0 * get(p[1]) + 8.0 * get(p[2]) - get(p[3])) / (12.0 * hs[a]);
    };
    const double dphi = fd([](const FieldState& x) { return x.phase; });
    const double ds = fd([](const FieldState& x) { return x.arclength; });
    const double damp = fd([](const FieldState& x) { return x.amplitude; });
    INFO("coordinate " << a);
    CHECK(std::abs(dphi - s.grad_phase[a]) < 1e-6 * (std::abs(s.grad_phase[a]) + s.w));
    CHECK(std::abs(ds - s.grad_arclength[a]) < 1e-6 * (std::abs(s.grad_arclength[a]) + 1.0));
    CHECK(std::abs(damp - s.grad_amplitude[a]) < 1e-5 * (std::abs(s.grad_amplitude[a]) + s.amplitude / s.arclength));
    // Derivative of the Jacobi matrix.
    Mat63 dj = (p[0].frame.jf - 8.0 * p[1].frame.jf + 8.0 * p[2].frame.jf - p[3].frame.jf) / (12.0 * hs[a]);
    CHECK((dj - s.frame.djf[a]).norm() < 1e-5 * (s.frame.djf[a].norm() + s.frame.jf.norm() / s.arclength));
  }
}

TEST_CASE("bare phase points carry no ray-coordinate frame") {
  const Environment env = pekeris();
  PhasePoint f{0.0, 0.0, 0.0, omega(100.0), 0.0, 0.0};
  f.kx = mode_wavenumber(env, 0, f.w, 100.0);
  const InitialState init = point_state(env, 0, f);
  TraceOptions o;
  o.second_variation = false;
  o.detect_caustics = false;
  const RaySolution ray = trace_ray(env, 0, init, 1000.0, o);
  CHECK_THROWS_AS(jacobi_frame(ray, 500.0), Error);
  CHECK(computative_gradient(ray, 500.0, Quantity::Tau) == Vec3(1, 0, 0));
  CHECK_THROWS_AS(computative_gradient(ray, 5000.0, Quantity::Tau), Error);
}
