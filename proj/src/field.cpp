#include "stray/field.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "stray/errors.hpp"

namespace stray {

namespace {

constexpr double kGuardBand = 1e-6;
constexpr double kRankTolerance = 1e-10;

// Jacobi data in the elapsed-time coordinates (t, mu, nu).
struct TFrame {
  Mat63 K;
  // S[u][v] = d K_v / d u, symmetric in (u, v).
  std::array<std::array<Vec6, 3>, 3> S;
};

Vec6 contract(const Tensor6& phi, const Vec6& a, const Vec6& b) {
  Vec6 r;
  for (int i = 0; i < 6; ++i) r[i] = a.dot(phi[i] * b);
  return r;
}

TFrame t_frame(const InitialState& init, const Mat6& P, const Tensor6& phi, const Mat6& M) {
  TFrame fr;
  fr.K = P * init.jacobi_t;
  for (int u = 0; u < 3; ++u) fr.S[0][u] = fr.S[u][0] = M * fr.K.col(u);
  const Vec6 dm = init.jacobi_t.col(1), dn = init.jacobi_t.col(2);
  fr.S[1][1] = contract(phi, dm, dm) + P * init.hess_f0[0];
  fr.S[1][2] = fr.S[2][1] = contract(phi, dm, dn) + P * init.hess_f0[1];
  fr.S[2][2] = contract(phi, dn, dn) + P * init.hess_f0[2];
  return fr;
}

// d/d(tau, mu, nu) = C^T d/d(t, mu, nu), since tau = nu + t.
const Mat3& coord_change() {
  static const Mat3 c = (Mat3() << 1, 0, -1, 0, 1, 0, 0, 0, 1).finished();
  return c;
}

Vec3 to_tau_coords(const Vec3& grad_t) { return coord_change().transpose() * grad_t; }

// Gradient of ln|det J_r| in t-coordinates.
Vec3 log_det_gradient(const TFrame& fr) {
  const Mat3 jr = fr.K.topRows<3>();
  const Eigen::PartialPivLU<Mat3> lu(jr);
  Vec3 g;
  for (int u = 0; u < 3; ++u) {
    Mat3 d;
    for (int v = 0; v < 3; ++v) d.col(v) = fr.S[u][v].head<3>();
    g[u] = lu.solve(d).trace();
  }
  return g;
}

// ln g and its phase-space gradient, with g = q sqrt(1 + q_w^2).
std::pair<double, Vec6> log_g(const Jet<3>& q) {
  const Jet<3> qw = q.partial(0);
  const Jet<3> lg = log(q) + 0.5 * log(1.0 + qw * qw);
  Vec6 grad = Vec6::Zero();
  grad[kW] = lg.d(0);
  grad[kX] = lg.d(1);
  grad[kY] = lg.d(2);
  return {lg.value(), grad};
}

}  // namespace

FieldState field_state(const RaySolution& ray, double tau) {
  if (!ray.env) throw Error(ErrorKind::Validation, "ray has no environment");
  const Environment& env = *ray.env;
  const InitialState& init = ray.init;
  const RayState st = ray.at(tau);
  const double t = st.t;

  const LocalModel m = local_model(env, ray.mode, st.f, 2);
  const LocalModel m0 = local_model(env, ray.mode, init.f0, 2);
  const TFrame fr = t_frame(init, st.P, st.Phi, tau_field_jacobian(m));
  Tensor6 zero;
  for (auto& z : zero) z.setZero();
  const TFrame fr0 = t_frame(init, Mat6::Identity(), zero, tau_field_jacobian(m0));

  FieldState out;
  out.tau = tau;
  out.w = st.f.w;
  out.k = {st.f.kx, st.f.ky};
  out.arclength = st.arclength;

  // Jacobi frame in (tau, mu, nu).
  JacobiFrame& jf = out.frame;
  jf.tau = tau;
  const Mat3& C = coord_change();
  jf.jf = fr.K * C;
  jf.jr = jf.jf.topRows<3>();
  jf.det = jf.jr.determinant();
  jf.D = std::abs(jf.det);
  for (int a = 0; a < 3; ++a) {
    jf.djf[a].setZero();
    for (int b = 0; b < 3; ++b)
      for (int u = 0; u < 3; ++u)
        for (int v = 0; v < 3; ++v)
          if (C(u, a) != 0.0 && C(v, b) != 0.0) jf.djf[a].col(b) += C(u, a) * C(v, b) * fr.S[u][v];
  }
  const Eigen::JacobiSVD<Mat63> svd(jf.jf, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv[2] > kRankTolerance * sv[0])) throw Error(ErrorKind::RankLoss, "Jacobi matrix lost rank");
  jf.pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().leftCols<3>().transpose();

  out.det = jf.det;
  out.in_caustic_band = !(jf.D >= kGuardBand * ray.det_median) || jf.D == 0.0;

  // Phase and arclength.
  const Vec6 dm = init.jacobi_t.col(1), dn = init.jacobi_t.col(2);
  const double v = m.v, q = m.q.value();
  out.phase = init.phase - st.f.w * t + st.qv_integral;
  const Vec3 gphi_t(-st.f.w + q * v, init.phase_grad[0] - dm[kW] * t + st.phase_grad_integral.dot(dm),
                    init.phase_grad[1] - dn[kW] * t + st.phase_grad_integral.dot(dn));
  const Vec3 gs_t(v, st.arclength_grad_integral.dot(dm), st.arclength_grad_integral.dot(dn));
  out.grad_phase = to_tau_coords(gphi_t);
  out.grad_arclength = to_tau_coords(gs_t);
  out.grad_tau = Vec3(1.0, 0.0, 0.0);

  // Amplitude from the transport invariant A^2 g D.
  const auto [lg, dlg] = log_g(m.q);
  const auto [lg0, dlg0] = log_g(m0.q);
  out.g = std::exp(lg);
  const double D0 = std::abs(fr0.K.topRows<3>().determinant());
  const double log_a = std::log(init.amplitude) + 0.5 * (lg0 + std::log(D0) - lg - std::log(jf.D));
  out.amplitude = std::exp(log_a);
  if (jf.D > 0.0 && D0 > 0.0) {
    const Vec3 glg_t = fr.K.transpose() * dlg;
    const Vec3 glg0_t(0.0, dlg0.dot(dm), dlg0.dot(dn));
    Vec3 gld0_t = log_det_gradient(fr0);
    gld0_t[0] = 0.0;  // initial data depend on (mu, nu) only
    const Vec3 gla0_t(0.0, init.log_amplitude_grad[0], init.log_amplitude_grad[1]);
    const Vec3 gla_t = gla0_t + 0.5 * (glg0_t + gld0_t - glg_t - log_det_gradient(fr));
    out.grad_amplitude = out.amplitude * to_tau_coords(gla_t);
  }
  return out;
}

JacobiFrame jacobi_frame(const RaySolution& ray, double tau) { return field_state(ray, tau).frame; }

Amplitude amplitude(const RaySolution& ray, double tau) {
  const FieldState s = field_state(ray, tau);
  return {s.amplitude, s.in_caustic_band};
}

double phase(const RaySolution& ray, double tau) {
  const RayState st = ray.at(tau);
  return ray.init.phase - st.f.w * st.t + st.qv_integral;
}

Vec3 computative_gradient(const RaySolution& ray, double tau, Quantity which) {
  if (which == Quantity::Tau) {
    ray.at(tau);  // span check
    return Vec3(1.0, 0.0, 0.0);
  }
  const FieldState s = field_state(ray, tau);
  switch (which) {
    case Quantity::Arclength:
      return s.grad_arclength;
    case Quantity::Phase:
      return s.grad_phase;
    case Quantity::Amplitude:
      if (s.in_caustic_band) throw Error(ErrorKind::CausticBand, "amplitude gradient inside a caustic guard band");
      return s.grad_amplitude;
    default:
      return s.grad_tau;
  }
}

Vec6 observable_gradient(const JacobiFrame& frame, const Vec3& grad_r) { return frame.pinv.transpose() * grad_r; }

Vec3 space_time_gradient(const JacobiFrame& frame, const Vec3& grad_r) {
  const double scale = frame.jr.norm();
  if (!(frame.D > 1e-14 * scale * scale * scale)) throw Error(ErrorKind::RankLoss, "space-time Jacobi block is singular");
  return frame.jr.transpose().partialPivLu().solve(grad_r);
}

double transport_invariant(const RaySolution& ray, double tau) {
  const FieldState s = field_state(ray, tau);
  return s.amplitude * s.amplitude * s.g * s.frame.D;
}

}  // namespace stray
