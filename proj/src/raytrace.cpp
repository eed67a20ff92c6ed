#include "stray/raytrace.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <Eigen/Dense>

#include "stray/errors.hpp"
#include "stray/modes.hpp"

namespace stray {

namespace {

// Packed state layout.
constexpr int kOffF = 0;
constexpr int kOffP = 6;
constexpr int kOffPhi = 42;
constexpr int kOffQv = 258;
constexpr int kOffS = 259;
constexpr int kOffGphi = 260;
constexpr int kOffGs = 266;
static_assert(kOffGs + 6 == kStateSize);

constexpr double kRankTolerance = 1e-10;
constexpr double kCausticRelTol = 1e-6;

Vec6 slot_gradient(const Jet<3>& j) {
  Vec6 g = Vec6::Zero();
  g[kW] = j.d(0);
  g[kX] = j.d(1);
  g[kY] = j.d(2);
  return g;
}

class TracerSystem {
 public:
  TracerSystem(const Environment& env, int mode, bool second) : env_(env), mode_(mode), second_(second) {}

  void operator()(double /*t*/, const Eigen::VectorXd& y, Eigen::VectorXd& dy) const {
    const PhasePoint f = PhasePoint::from(y.segment<6>(kOffF));
    const LocalModel m = local_model(env_, mode_, f, second_ ? 3 : 2);
    dy.resize(kStateSize);
    const Mat6 M = tau_field_jacobian(m);
    const Eigen::Map<const Mat6> P(y.data() + kOffP);
    dy.segment<6>(kOffF) = tau_field(m);
    Eigen::Map<Mat6>(dy.data() + kOffP) = M * P;
    if (second_) {
      const Tensor6 d2 = tau_field_hessian(m);
      for (int i = 0; i < 6; ++i) {
        Eigen::Map<Mat6> out(dy.data() + kOffPhi + 36 * i);
        out = P.transpose() * d2[i] * P;
        for (int l = 0; l < 6; ++l)
          if (M(i, l) != 0.0) out += M(i, l) * Eigen::Map<const Mat6>(y.data() + kOffPhi + 36 * l);
      }
    } else {
      dy.segment<216>(kOffPhi).setZero();
    }
    const Jet<3> v = inverse(m.q.partial(0));
    const Jet<3> qv = m.q * v;
    dy[kOffQv] = qv.value();
    dy[kOffS] = v.value();
    dy.segment<6>(kOffGphi) = P.transpose() * slot_gradient(qv);
    dy.segment<6>(kOffGs) = P.transpose() * slot_gradient(v);
  }

 private:
  const Environment& env_;
  int mode_;
  bool second_;
};

double det_r(const Eigen::VectorXd& y, const Mat63& jacobi_t) {
  const Eigen::Map<const Mat6> P(y.data() + kOffP);
  const Eigen::Matrix3d jr = (P * jacobi_t).topRows<3>();
  return jr.determinant();
}

int sign_of(double d) { return d > 0.0 ? 1 : (d < 0.0 ? -1 : 0); }

ErrorKind path_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::OutOfDomain:
      return ErrorKind::DomainExit;
    case ErrorKind::NoTrappedModes:
    case ErrorKind::CutoffProximity:
    case ErrorKind::DegenerateGroupSpeed:
      return ErrorKind::CutoffCrossing;
    default:
      return k;
  }
}

}  // namespace

RayState unpack(double t, const Eigen::VectorXd& y) {
  RayState s;
  s.t = t;
  s.f = PhasePoint::from(y.segment<6>(kOffF));
  s.P = Eigen::Map<const Mat6>(y.data() + kOffP);
  for (int i = 0; i < 6; ++i) s.Phi[i] = Eigen::Map<const Mat6>(y.data() + kOffPhi + 36 * i);
  s.qv_integral = y[kOffQv];
  s.arclength = y[kOffS];
  s.phase_grad_integral = y.segment<6>(kOffGphi);
  s.arclength_grad_integral = y.segment<6>(kOffGs);
  return s;
}

RayState RaySolution::sample(std::size_t i) const { return unpack(t[i], states[i]); }

std::vector<std::size_t> RaySolution::knot_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < is_knot.size(); ++i)
    if (is_knot[i]) out.push_back(i);
  return out;
}

Eigen::VectorXd RaySolution::state_at(double tau_q) const {
  if (t.empty()) throw Error(ErrorKind::OutOfSpan, "empty ray");
  const double tq = tau_q - init.f0.tau;
  const double slack = 1e-12 * std::max(1.0, std::abs(t.back()));
  if (tq < t.front() - slack || tq > t.back() + slack)
    throw Error(ErrorKind::OutOfSpan, "tau outside the traced span");
  auto it = std::lower_bound(t.begin(), t.end(), tq);
  if (it == t.end()) return states.back();
  std::size_t i = static_cast<std::size_t>(it - t.begin());
  if (std::abs(*it - tq) <= slack || i == 0) return states[i];
  return hermite(t[i - 1], states[i - 1], rates[i - 1], t[i], states[i], rates[i], tq);
}

RayState RaySolution::at(double tau_q) const { return unpack(tau_q - init.f0.tau, state_at(tau_q)); }

std::vector<InitialState> initial_fan(const Environment& env, int mode, const SourceSpec& src,
                                      const std::vector<double>& mu, const std::vector<double>& nu) {
  if (!(src.start_radius > 0.0)) throw Error(ErrorKind::Validation, "start radius must be positive", "source.start_radius");
  if (mu.empty() || nu.empty()) throw Error(ErrorKind::Validation, "empty fan grid", "fan");
  std::vector<InitialState> out;
  out.reserve(mu.size() * nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      const auto M = Jet<2>::variable(0, mu[i]);
      const auto N = Jet<2>::variable(1, nu[j]);
      const Jet<2> X = src.x0 + src.start_radius * cos(M);
      const Jet<2> Y = src.y0 + src.start_radius * sin(M);
      const Jet<2> W = src.w_center + src.chirp_slope * N;
      if (!(W.value() > 0.0)) throw Error(ErrorKind::Validation, "non-positive launch frequency", "source");
      const Jet<3> q3 = dispersion_jet(env, mode, W.value(), X.value(), Y.value());
      const Jet<2> Q = compose<3, 2>(q3, {W, X, Y});
      const std::array<Jet<2>, 6> f{N, X, Y, W, Q * cos(M), Q * sin(M)};

      InitialState s;
      s.mu_index = static_cast<int>(i);
      s.nu_index = static_cast<int>(j);
      s.mu = mu[i];
      s.nu = nu[j];
      s.start_radius = src.start_radius;
      Vec6 v0;
      for (int k = 0; k < 6; ++k) {
        v0[k] = f[k].value();
        s.jacobi_t(k, 1) = f[k].d(0);
        s.jacobi_t(k, 2) = f[k].d(1);
        s.hess_f0[0][k] = f[k].d(0, 0);
        s.hess_f0[1][k] = f[k].d(0, 1);
        s.hess_f0[2][k] = f[k].d(1, 1);
      }
      s.f0 = PhasePoint::from(v0);
      const Vec6 g = tau_field(local_model(q3, s.f0, 2));
      s.jacobi_t.col(0) = g;
      s.jacobi = s.jacobi_t;
      s.jacobi.col(2) -= g;  // d tau0/d nu = 1

      const double dn = nu[j] - src.nu_center;
      s.phase = -(src.w_center * dn + 0.5 * src.chirp_slope * (nu[j] * nu[j] - src.nu_center * src.nu_center));
      s.phase_grad = {0.0, -src.frequency(nu[j])};
      s.amplitude = src.amplitude;
      if (src.envelope_width > 0.0) {
        const double u = dn / src.envelope_width;
        s.amplitude *= std::exp(-0.5 * u * u);
        s.log_amplitude_grad = {0.0, -dn / (src.envelope_width * src.envelope_width)};
      }

      const Eigen::JacobiSVD<Mat63> svd(s.jacobi);
      const auto& sv = svd.singularValues();
      if (!(sv[2] > kRankTolerance * sv[0]))
        throw Error(ErrorKind::RankDeficientFan, "initial Jacobi matrix is rank deficient at mu=" +
                                                     std::to_string(mu[i]) + ", nu=" + std::to_string(nu[j]));
      out.push_back(s);
    }
  }
  return out;
}

InitialState point_state(const Environment& env, int mode, const PhasePoint& f0) {
  InitialState s;
  s.f0 = f0;
  s.jacobi_t.setZero();
  s.jacobi_t.col(0) = tau_field(local_model(env, mode, f0, 2));
  s.jacobi = s.jacobi_t;
  return s;
}

RaySolution trace_ray(const Environment& env, int mode, const InitialState& init, double tau_end,
                      const TraceOptions& opts) {
  const double t_end = tau_end - init.f0.tau;
  if (!(t_end > 0.0)) throw Error(ErrorKind::Validation, "tau_end must follow the emission time", "tau_end");

  std::vector<double> knots;
  if (opts.knots.empty()) {
    const int n = std::max(1, opts.knot_count);
    for (int i = 1; i <= n; ++i) knots.push_back(t_end * i / n);
  } else {
    for (double tk : opts.knots) {
      const double e = tk - init.f0.tau;
      if (e > 0.0 && e <= t_end) knots.push_back(e);
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    if (knots.empty() || knots.back() < t_end) knots.push_back(t_end);
  }

  RaySolution ray;
  ray.env = &env;
  ray.mode = mode;
  ray.init = init;

  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(kStateSize);
  y0.segment<6>(kOffF) = init.f0.vec();
  Eigen::Map<Mat6>(y0.data() + kOffP).setIdentity();
  y0[kOffS] = init.start_radius;

  TracerSystem sys(env, mode, opts.second_variation);
  DormandPrince dp(std::cref(sys), opts.ode);
  // A separate stepper for caustic localization keeps the main one's scratch intact.
  DormandPrince probe(std::cref(sys), opts.ode);

  const bool caustics = opts.detect_caustics && det_r(y0, init.jacobi_t) != 0.0;
  std::size_t next_knot = 0;
  auto observer = [&](double t, const Eigen::VectorXd& y, const Eigen::VectorXd& dy) {
    if (!ray.t.empty() && t <= ray.t.back()) return true;  // segment restart
    if (caustics && !ray.t.empty()) {
      const double d0 = det_r(ray.states.back(), init.jacobi_t), d1 = det_r(y, init.jacobi_t);
      if (sign_of(d0) != sign_of(d1) && sign_of(d1) != 0) {
        const double ta = ray.t.back();
        double lo = 0.0, hi = t - ta;
        Eigen::VectorXd ym(kStateSize);
        while (hi - lo > kCausticRelTol * t_end) {
          const double mid = 0.5 * (lo + hi);
          probe.step(ta, ray.states.back(), ray.rates.back(), mid, ym);
          if (sign_of(det_r(ym, init.jacobi_t)) == sign_of(d0)) lo = mid;
          else hi = mid;
        }
        ray.caustics.push_back({init.f0.tau + ta + 0.5 * (lo + hi), sign_of(d0), sign_of(d1)});
      }
    }
    while (next_knot < knots.size() && knots[next_knot] < t) ++next_knot;
    const bool knot = next_knot < knots.size() && knots[next_knot] == t;
    ray.t.push_back(t);
    ray.states.push_back(y);
    ray.rates.push_back(dy);
    ray.is_knot.push_back(knot || ray.t.size() == 1);
    const double q = dy[kOffQv] / dy[kOffS];
    ray.hamiltonian.push_back(y[kOffF + kKx] * y[kOffF + kKx] + y[kOffF + kKy] * y[kOffF + kKy] - q * q);
    return true;
  };

  try {
    if (!opts.renormalize_on_shell) {
      ray.stats = dp.integrate(0.0, y0, knots, observer);
    } else {
      Eigen::VectorXd y = y0;
      double t = 0.0;
      for (double tk : knots) {
        const OdeStats st = dp.integrate(t, y, {tk}, observer);
        ray.stats.accepted += st.accepted;
        ray.stats.rejected += st.rejected;
        ray.stats.evaluations += st.evaluations;
        y = ray.states.back();
        t = ray.t.back();
        const double q = mode_wavenumber(env, mode, y[kOffF + kW], env.depth_at(y[kOffF + kX], y[kOffF + kY]));
        const double k = std::hypot(y[kOffF + kKx], y[kOffF + kKy]);
        y[kOffF + kKx] *= q / k;
        y[kOffF + kKy] *= q / k;
        ray.states.back() = y;
      }
    }
  } catch (const Error& e) {
    const ErrorKind kind = path_error(e.kind());
    if (!opts.allow_truncation || ray.t.size() < 2) throw Error(kind, e.what());
    ray.truncated = true;
    ray.truncation_reason = std::string(to_string(kind)) + ": " + e.what();
  }

  std::vector<double> dets;
  dets.reserve(ray.size());
  for (const auto& y : ray.states) dets.push_back(std::abs(det_r(y, init.jacobi_t)));
  if (!dets.empty()) {
    auto mid = dets.begin() + static_cast<std::ptrdiff_t>(dets.size() / 2);
    std::nth_element(dets.begin(), mid, dets.end());
    ray.det_median = *mid;
  }
  return ray;
}

std::vector<RaySolution> trace_fan(const Environment& env, int mode, const std::vector<InitialState>& inits,
                                   double tau_end, const TraceOptions& opts, int threads) {
  std::vector<RaySolution> out(inits.size());
  std::vector<std::exception_ptr> errors(inits.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < inits.size(); i = next++) {
      try {
        out[i] = trace_ray(env, mode, inits[i], tau_end, opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(inits.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

Vec6 propagate_variation(const RaySolution& ray, double tau, const Vec6& df0) { return ray.at(tau).P * df0; }

Mat6 perturbed_propagator(const RaySolution& ray, double tau, const Vec6& df0) {
  const RayState s = ray.at(tau);
  Mat6 dP;
  for (int i = 0; i < 6; ++i) dP.row(i) = (s.Phi[i] * df0).transpose();
  return dP;
}

Mat6 perturbed_propagator(const RaySolution& ray, double tau, const Eigen::Vector3d& dr) {
  return perturbed_propagator(ray, tau, Vec6(ray.init.jacobi * dr));
}

std::vector<AffineSample> trace_affine(const Environment& env, int mode, const PhasePoint& f0, double tau_end,
                                       const OdeOptions& ode, int samples) {
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    const LocalModel m = local_model(env, mode, PhasePoint::from(y.head<6>()), 2);
    const Mat6& J = structure_matrix();
    dy.resize(42);
    dy.head<6>() = J * m.h.grad;
    Eigen::Map<Mat6>(dy.data() + 6) = J * m.h.hess * Eigen::Map<const Mat6>(y.data() + 6);
  };
  const LocalModel m0 = local_model(env, mode, f0, 2);
  const double rate = (structure_matrix() * m0.h.grad)[kTau];  // d tau / d xi
  if (!(rate > 0.0)) throw Error(ErrorKind::DegenerateGroupSpeed, "time does not advance along the ray");
  const double xi_end = (tau_end - f0.tau) / rate;
  std::vector<double> knots;
  for (int i = 1; i <= 3 * samples; ++i) knots.push_back(xi_end * i / samples);

  Eigen::VectorXd y0(42);
  y0.head<6>() = f0.vec();
  Eigen::Map<Mat6>(y0.data() + 6).setIdentity();
  std::vector<AffineSample> out;
  DormandPrince dp(rhs, ode);
  try {
    dp.integrate(0.0, y0, knots, [&](double xi, const Eigen::VectorXd& y, const Eigen::VectorXd&) {
      out.push_back({xi, PhasePoint::from(y.head<6>()), Eigen::Map<const Mat6>(y.data() + 6)});
      return out.back().f.tau < tau_end;
    });
  } catch (const Error& e) {
    throw Error(path_error(e.kind()), e.what());
  }
  return out;
}

double symplectic_defect(const Mat6& P) {
  const Mat6& J = structure_matrix();
  return (P.transpose() * J * P - J).norm();
}

}  // namespace stray
