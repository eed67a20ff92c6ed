#include "stray/hamiltonian.hpp"

#include <cmath>

#include "stray/errors.hpp"
#include "stray/modes.hpp"

namespace stray {

namespace {

// Phase-space slot of each dispersion variable (w, x, y).
constexpr int kSlotOf[3] = {kW, kX, kY};

constexpr double kMinSlowness = 1e-12;

}  // namespace

const Mat6& structure_matrix() {
  static const Mat6 j = [] {
    Mat6 m = Mat6::Zero();
    const double s[3] = {-1.0, 1.0, 1.0};
    for (int i = 0; i < 3; ++i) {
      m(i, i + 3) = s[i];
      m(i + 3, i) = -s[i];
    }
    return m;
  }();
  return j;
}

double hamiltonian(const Environment& env, int mode, const PhasePoint& f) {
  const double q = mode_wavenumber(env, mode, f.w, env.depth_at(f.x, f.y));
  return f.kx * f.kx + f.ky * f.ky - q * q;
}

LocalModel local_model(const Jet<3>& q, const PhasePoint& f, int max_order) {
  if (max_order < 1 || max_order > 3) throw Error(ErrorKind::Validation, "max_order must be 1, 2 or 3", "max_order");
  LocalModel m;
  m.q = q;
  const double qw = q.d(0);
  if (!(qw >= kMinSlowness)) throw Error(ErrorKind::DegenerateGroupSpeed, "dq/dw is not positive");
  m.v = 1.0 / qw;

  const Jet<3> mq2 = -(q * q);
  HamiltonianDerivatives& h = m.h;
  h.value = f.kx * f.kx + f.ky * f.ky + mq2.value();
  h.grad[kKx] = 2.0 * f.kx;
  h.grad[kKy] = 2.0 * f.ky;
  for (int a = 0; a < 3; ++a) h.grad[kSlotOf[a]] = mq2.d(a);
  if (max_order >= 2) {
    h.hess(kKx, kKx) = h.hess(kKy, kKy) = 2.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) h.hess(kSlotOf[a], kSlotOf[b]) = mq2.d(a, b);
  }
  if (max_order >= 3) {
    for (auto& t : h.third) t.setZero();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) h.third[kSlotOf[a]](kSlotOf[b], kSlotOf[c]) = mq2.d(a, b, c);
  }

  // sigma = 1/(2 q q_w); the derivative jet is exact through degree 2.
  const Jet<3> s = inverse(2.0 * q * q.partial(0));
  m.s.value = s.value();
  for (int a = 0; a < 3; ++a) m.s.grad[kSlotOf[a]] = s.d(a);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m.s.hess(kSlotOf[a], kSlotOf[b]) = s.d(a, b);
  return m;
}

LocalModel local_model(const Environment& env, int mode, const PhasePoint& f, int max_order) {
  return local_model(dispersion_jet(env, mode, f.w, f.x, f.y), f, max_order);
}

HamiltonianDerivatives derivatives(const Environment& env, int mode, const PhasePoint& f, int max_order) {
  return local_model(env, mode, f, max_order).h;
}

double group_speed(const Environment& env, int mode, const PhasePoint& f) {
  const auto d = dispersion_derivatives(env, mode, f.w, f.x, f.y, 1);
  if (!(d.grad[0] >= kMinSlowness)) throw Error(ErrorKind::DegenerateGroupSpeed, "dq/dw is not positive");
  return 1.0 / d.grad[0];
}

SigmaDerivatives sigma(const Environment& env, int mode, const PhasePoint& f, int max_order) {
  if (max_order < 0 || max_order > 2) throw Error(ErrorKind::Validation, "max_order must be 0, 1 or 2", "max_order");
  SigmaDerivatives s = local_model(env, mode, f, 3).s;
  if (max_order < 2) s.hess.setZero();
  if (max_order < 1) s.grad.setZero();
  return s;
}

Vec6 tau_field(const LocalModel& m) {
  return m.s.value * (structure_matrix() * m.h.grad);
}

Mat6 tau_field_jacobian(const LocalModel& m) {
  return structure_matrix() * (m.s.value * m.h.hess + m.h.grad * m.s.grad.transpose());
}

Tensor6 tau_field_hessian(const LocalModel& m) {
  // B[l](a, b) = sigma H_lab + s_a H_lb + s_b H_la + s_ab H_l, then D2g[i] = sum_l J_il B[l].
  Tensor6 b;
  for (int l = 0; l < 6; ++l) {
    Mat6 row_h = m.h.hess.row(l).transpose() * m.s.grad.transpose();  // (a, b) -> H_la s_b
    b[l] = m.s.value * m.h.third[l] + row_h + row_h.transpose() + m.h.grad[l] * m.s.hess;
  }
  const Mat6& j = structure_matrix();
  Tensor6 out;
  for (int i = 0; i < 6; ++i) {
    out[i].setZero();
    for (int l = 0; l < 6; ++l)
      if (j(i, l) != 0.0) out[i] += j(i, l) * b[l];
  }
  return out;
}

}  // namespace stray
