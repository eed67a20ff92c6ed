#include <doctest.h>

#include <cmath>

#include "stray/hamiltonian.hpp"
#include "stray/modes.hpp"
#include "support.hpp"

using namespace stray;
using namespace stray::test;

namespace {

// A random phase point near the dispersion shell of mode l.
PhasePoint random_point(Gen& gen, const Environment& env, int l) {
  PhasePoint f;
  f.tau = gen.uniform(0, 1e4);
  f.x = gen.uniform(-2000, 2000);
  f.y = gen.uniform(-2000, 2000);
  f.w = omega(gen.uniform(80, 120));
  const double q = mode_wavenumber(env, l, f.w, env.depth_at(f.x, f.y));
  const double a = gen.uniform(0, 2 * M_PI), scale = gen.uniform(0.98, 1.02);
  f.kx = scale * q * std::cos(a);
  f.ky = scale * q * std::sin(a);
  return f;
}

PhasePoint shifted(const PhasePoint& f, int slot, double h) {
  Vec6 v = f.vec();
  v[slot] += h;
  return PhasePoint::from(v);
}

double step_for(const PhasePoint& f, int slot) {
  const Vec6 v = f.vec();
  return slot == kW ? 1e-4 * v[kW] : slot <= kY ? 0.5 : 1e-4 * std::abs(v[kW]);
}

// Fourth-order central difference of a vector-valued function along one slot.
template <class F>
auto fd(const F& fn, const PhasePoint& f, int slot) {
  const double h = step_for(f, slot);
  return ((fn(shifted(f, slot, -2 * h)) - 8.0 * fn(shifted(f, slot, -h)) + 8.0 * fn(shifted(f, slot, h)) -
           fn(shifted(f, slot, 2 * h))) /
          (12.0 * h))
      .eval();
}

}  // namespace

TEST_CASE("structure matrix") {
  const Mat6& J = structure_matrix();
  CHECK((J + J.transpose()).norm() == 0.0);
  CHECK((J * J + Mat6::Identity()).norm() == 0.0);
}

TEST_CASE("Hamiltonian derivatives agree with finite differences") {
  const Environment env = wedge(100.0, 0.003, -0.002);
  Gen gen(21);
  for (int trial = 0; trial < 12; ++trial) {
    const int l = gen.integer(0, 3);
    const PhasePoint f = random_point(gen, env, l);
    const HamiltonianDerivatives d = derivatives(env, l, f, 3);
    CHECK(std::abs(d.value - hamiltonian(env, l, f)) < 1e-14 * f.w * f.w);

    auto H = [&](const PhasePoint& p) { return Eigen::Matrix<double, 1, 1>(hamiltonian(env, l, p)); };
    auto G = [&](const PhasePoint& p) { return derivatives(env, l, p, 1).grad; };
    auto Hs = [&](const PhasePoint& p) { return derivatives(env, l, p, 2).hess; };
    for (int s = 0; s < 6; ++s) {
      INFO("trial " << trial << " slot " << s);
      const double gs = fd(H, f, s)(0);
      CHECK(std::abs(gs - d.grad[s]) <= 1e-7 * (d.grad.norm()));
      const Vec6 hs = fd(G, f, s);
      CHECK((hs - d.hess.col(s)).norm() <= 1e-6 * (d.hess.norm()));
      const Mat6 ts = fd(Hs, f, s);
      CHECK((ts - d.third[s]).norm() <= 1e-5 * (d.third[s].norm() + d.hess.norm() / 100.0));
    }
    CHECK((d.hess - d.hess.transpose()).norm() == 0.0);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        for (int k = 0; k < 6; ++k) {
          CHECK(d.third[i](j, k) == d.third[j](i, k));
          CHECK(d.third[i](j, k) == d.third[i](k, j));
        }
    CHECK(d.grad[kTau] == 0.0);
  }
}

TEST_CASE("tau-parameterized field and its derivatives") {
  const Environment env = wedge(90.0, 0.002, 0.001);
  Gen gen(22);
  for (int trial = 0; trial < 8; ++trial) {
    const int l = gen.integer(0, 2);
    const PhasePoint f = random_point(gen, env, l);
    const LocalModel m = local_model(env, l, f, 3);
    const double v = group_speed(env, l, f);
    const DispersionDerivatives dq = dispersion_derivatives(env, l, f.w, f.x, f.y, 1);

    // Explicit form (1, v k/q, 0, v grad q).
    const Vec6 g = tau_field(m);
    Vec6 expect;
    expect << 1.0, v * f.kx / dq.q, v * f.ky / dq.q, 0.0, v * dq.grad[1], v * dq.grad[2];
    CHECK((g - expect).norm() < 1e-13 * expect.norm());

    // sigma = v / (2q).
    const SigmaDerivatives s = sigma(env, l, f, 2);
    CHECK(rel(s.value, v / (2 * dq.q)) < 1e-13);

    auto field = [&](const PhasePoint& p) { return tau_field(local_model(env, l, p, 2)); };
    auto jac = [&](const PhasePoint& p) { return tau_field_jacobian(local_model(env, l, p, 3)); };
    auto sig = [&](const PhasePoint& p) { return Eigen::Matrix<double, 1, 1>(sigma(env, l, p, 0).value); };
    auto sgrad = [&](const PhasePoint& p) { return sigma(env, l, p, 1).grad; };
    const Mat6 M = tau_field_jacobian(m);
    const Tensor6 D2 = tau_field_hessian(m);
    for (int c = 0; c < 6; ++c) {
      INFO("trial " << trial << " slot " << c);
      CHECK((fd(field, f, c) - M.col(c)).norm() <= 1e-7 * M.norm());
      const Mat6 dm = fd(jac, f, c);
      for (int i = 0; i < 6; ++i)
        CHECK((dm.row(i).transpose() - D2[i].col(c)).norm() <= 1e-5 * (D2[i].norm() + M.norm() / 100.0));
      CHECK(std::abs(fd(sig, f, c)(0) - s.grad[c]) <= 1e-7 * s.grad.norm());
      CHECK((fd(sgrad, f, c) - s.hess.col(c)).norm() <= 1e-6 * (s.hess.norm() + s.grad.norm() / 100.0));
    }
  }
}

TEST_CASE("on-shell points have vanishing Hamiltonian") {
  const Environment env = pekeris();
  for (int l = 0; l < 4; ++l) {
    PhasePoint f{0, 0, 0, omega(100), 0, 0};
    const double q = mode_wavenumber(env, l, f.w, 100.0);
    f.kx = q * 0.6;
    f.ky = q * 0.8;
    CHECK(std::abs(hamiltonian(env, l, f)) < 1e-14 * q * q);
  }
}
