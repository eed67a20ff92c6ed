#include "stray/modes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <utility>

#include <boost/math/tools/roots.hpp>

#include "stray/errors.hpp"

namespace stray {

namespace {

constexpr double kPi = std::numbers::pi;

// Grid resolution: samples per shortest vertical wavelength in the water.
constexpr int kPointsPerWavelength = 200;
constexpr int kTailSamples = 64;

// Fourth-order difference stencils used for general profiles, relative step.
constexpr double kFdRelStep = 2e-3;

// Prüfer integration resolution (RK4 steps per shortest wavelength).
constexpr int kShootStepsPerWavelength = 400;

void check_query(double w) {
  if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorKind::Validation, "frequency must be positive", "w");
}

double depth_or_throw(const Environment& env, double x, double y) {
  if (!env.bathymetry().in_domain(x, y))
    throw Error(ErrorKind::OutOfDomain, "position outside the bathymetry domain");
  const double h = env.depth_at(x, y);
  if (!(h > 0.0)) throw Error(ErrorKind::OutOfDomain, "non-positive depth at query position");
  return h;
}

template <class F>
double bracketed_root(F&& f, double lo, double hi) {
  std::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 2);
  try {
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
    if (iters >= 200) throw Error(ErrorKind::SolverFailure, "eigenvalue bracketing did not converge");
    return 0.5 * (a + b);
  } catch (const boost::math::evaluation_error& e) {
    throw Error(ErrorKind::SolverFailure, e.what());
  }
}

// ---------------------------------------------------------------- isovelocity water

struct Pekeris {
  double nw, nb, rw, rb;
};

Pekeris pekeris(const Environment& env) {
  return {env.profile_n().front(), env.n_bottom(), env.water_density(), env.bottom_density()};
}

int pekeris_count(const Pekeris& p, double w, double h) {
  const double gmax_h = w * std::sqrt(p.nw * p.nw - p.nb * p.nb) * h;
  int m = 0;
  while ((m + 0.5) * kPi < gmax_h) ++m;
  return m;
}

// With gamma = gmax sin(t) and beta = gmax cos(t) the dispersion relation
// gamma h + atan(gamma rb / (beta rw)) = (l + 1) pi is smooth and increasing on [0, pi/2].
struct PekerisRoot {
  double q, gamma, beta;
};

PekerisRoot pekeris_root(const Pekeris& p, int l, double w, double h) {
  const double gmax = w * std::sqrt(p.nw * p.nw - p.nb * p.nb);
  const double ratio = p.rb / p.rw;
  const double target = (l + 1) * kPi;
  auto g = [&](double t) { return gmax * h * std::sin(t) + std::atan2(ratio * std::sin(t), std::cos(t)) - target; };
  if (!(g(0.5 * kPi) > 0.0))
    throw Error(ErrorKind::NoTrappedModes, "mode " + std::to_string(l) + " is below cutoff");
  const double t = bracketed_root(g, 0.0, 0.5 * kPi);
  const double gamma = gmax * std::sin(t);
  const double beta = gmax * std::cos(t);
  return {std::sqrt(p.nb * p.nb * w * w + beta * beta), gamma, beta};
}

// Dispersion function in terms of (q, w, h), written to stay well conditioned
// for both soft and near-rigid bottoms.
template <class T>
T pekeris_g(const Pekeris& p, int l, const T& q, const T& w, const T& h) {
  const T gamma = sqrt(p.nw * p.nw * w * w - q * q);
  const T beta = sqrt(q * q - p.nb * p.nb * w * w);
  const double ratio = p.rb / p.rw;
  if (ratio * gamma.value() >= beta.value())
    return gamma * h - atan(beta / (gamma * ratio)) - (l + 0.5) * kPi;
  return gamma * h + atan(gamma * ratio / beta) - (l + 1.0) * kPi;
}

Jet<2> pekeris_jet(const Pekeris& p, int l, double w, double h) {
  const double q0 = pekeris_root(p, l, w, h).q;
  const Jet<3> g3 = pekeris_g(p, l, Jet<3>::variable(0, q0), Jet<3>::variable(1, w), Jet<3>::variable(2, h));
  const double gq = g3.d(0);
  const Jet<2> W = Jet<2>::variable(0, w);
  const Jet<2> H = Jet<2>::variable(1, h);
  Jet<2> Q(q0);
  // Fixed-slope Newton gains one order of the expansion per pass.
  for (int it = 0; it < 4; ++it) Q -= pekeris_g(p, l, Q, W, H) / gq;
  return Q;
}

// ---------------------------------------------------------------- general profile

struct Shooter {
  const Environment& env;
  double w, h, k;
  std::vector<double> breaks;  // segment ends in (0, h], profile nodes included
  std::vector<int> steps;      // RK4 steps per segment

  Shooter(const Environment& e, double w_, double h_) : env(e), w(w_), h(h_), k(e.n_water_max() * w_) {
    for (double z : env.profile_z())
      if (z > 0.0 && z < h) breaks.push_back(z);
    breaks.push_back(h);
    const double dz_max = 2.0 * kPi / k / kShootStepsPerWavelength;
    double z = 0.0;
    for (double end : breaks) {
      steps.push_back(std::max(4, static_cast<int>(std::ceil((end - z) / dz_max))));
      z = end;
    }
  }

  // Reuse the discretization of `ref` so that nearby problems differ smoothly.
  Shooter(const Environment& e, double w_, double h_, const Shooter& ref) : Shooter(e, w_, h_) {
    if (breaks.size() == ref.breaks.size()) steps = ref.steps;
  }

  // Prüfer angle at the bottom for horizontal wavenumber q; continuous in q.
  double theta_bottom(double q) const {
    const double q2 = q * q, w2 = w * w;
    auto rhs = [&](double z, double th) {
      const double n = env.n_water(z);
      const double c = std::cos(th), s = std::sin(th);
      return k * c * c + (n * n * w2 - q2) / k * s * s;
    };
    double z = 0.0, th = 0.0;
    for (std::size_t seg = 0; seg < breaks.size(); ++seg) {
      const double end = breaks[seg];
      const int n = steps[seg];
      const double dz = (end - z) / n;
      for (int i = 0; i < n; ++i) {
        const double k1 = rhs(z, th);
        const double k2 = rhs(z + 0.5 * dz, th + 0.5 * dz * k1);
        const double k3 = rhs(z + 0.5 * dz, th + 0.5 * dz * k2);
        const double k4 = rhs(z + dz, th + dz * k3);
        th += dz * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        z += dz;
      }
      z = end;
    }
    return th;
  }

  // Zero at eigenvalues of mode l, decreasing in q.
  double mismatch(int l, double q) const {
    const double nb = env.n_bottom();
    const double beta = std::sqrt(std::max(0.0, q * q - nb * nb * w * w));
    const double target =
        0.5 * kPi + std::atan(beta * env.water_density() / (k * env.bottom_density())) + l * kPi;
    return theta_bottom(q) - target;
  }

  int count() const {
    const double th = theta_bottom(env.n_bottom() * w);
    if (th <= 0.5 * kPi) return 0;
    return static_cast<int>(std::floor((th - 0.5 * kPi) / kPi)) + 1;
  }

  double root(int l) const {
    const double lo = env.n_bottom() * w, hi = env.n_water_max() * w;
    if (!(mismatch(l, lo) > 0.0))
      throw Error(ErrorKind::NoTrappedModes, "mode " + std::to_string(l) + " is below cutoff");
    return bracketed_root([&](double q) { return mismatch(l, q); }, lo, hi);
  }
};

double general_wavenumber(const Environment& env, int l, double w, double h) {
  return Shooter(env, w, h).root(l);
}

Jet<2> general_jet(const Environment& env, int l, double w, double h) {
  const double dw = kFdRelStep * w, dh = kFdRelStep * h;
  if (!(h - 3.0 * dh > 0.0)) throw Error(ErrorKind::StencilOutOfDomain, "difference stencil leaves the domain");
  const Shooter center(env, w, h);
  std::map<std::pair<int, int>, double> memo;
  auto f = [&](int i, int j) {
    auto key = std::make_pair(i, j);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    double v;
    try {
      v = Shooter(env, w + i * dw, h + j * dh, center).root(l);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NoTrappedModes)
        throw Error(ErrorKind::CutoffProximity, "mode " + std::to_string(l) + " crosses cutoff within the stencil");
      throw;
    }
    memo.emplace(key, v);
    return v;
  };
  static constexpr double c1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
  static constexpr double c2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
  static constexpr double c3[7] = {1.0 / 8, -1.0, 13.0 / 8, 0.0, -13.0 / 8, 1.0, -1.0 / 8};
  auto line = [&](const double* c, int len, bool along_w) {
    double s = 0.0;
    for (int i = 0; i < len; ++i) {
      const int o = i - len / 2;
      if (c[i] != 0.0) s += c[i] * (along_w ? f(o, 0) : f(0, o));
    }
    return s;
  };
  auto mixed = [&](const double* cw, const double* ch) {
    double s = 0.0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        if (cw[i] != 0.0 && ch[j] != 0.0) s += cw[i] * ch[j] * f(i - 2, j - 2);
    return s;
  };
  Jet<2> Q(f(0, 0));
  Q.set_coeff({1, 0}, line(c1, 5, true) / dw);
  Q.set_coeff({0, 1}, line(c1, 5, false) / dh);
  Q.set_coeff({2, 0}, line(c2, 5, true) / (dw * dw) / 2.0);
  Q.set_coeff({0, 2}, line(c2, 5, false) / (dh * dh) / 2.0);
  Q.set_coeff({1, 1}, mixed(c1, c1) / (dw * dh));
  Q.set_coeff({3, 0}, line(c3, 7, true) / (dw * dw * dw) / 6.0);
  Q.set_coeff({0, 3}, line(c3, 7, false) / (dh * dh * dh) / 6.0);
  Q.set_coeff({2, 1}, mixed(c2, c1) / (dw * dw * dh) / 2.0);
  Q.set_coeff({1, 2}, mixed(c1, c2) / (dw * dh * dh) / 2.0);
  return Q;
}

// ---------------------------------------------------------------- sampling and quadrature

int water_intervals(const Environment& env, double w, double h) {
  const double wavelengths = h * env.n_water_max() * w / (2.0 * kPi);
  int n = static_cast<int>(std::ceil(wavelengths * kPointsPerWavelength));
  n = std::max(n, kPointsPerWavelength);
  return (n + 3) / 4 * 4;  // composite Boole rule
}

// Composite Boole rule over samples on a uniform grid with 4k intervals.
template <class F>
double boole(const std::vector<double>& z, F&& f) {
  const std::size_t n = z.size() - 1;
  const double dz = (z.back() - z.front()) / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    double c;
    if (i == 0 || i == n) c = 7.0;
    else if (i % 4 == 0) c = 14.0;
    else if (i % 2 == 0) c = 12.0;
    else c = 32.0;
    s += c * f(i);
  }
  return s * 2.0 * dz / 45.0;
}

void fill_tail(ModeSolution& m) {
  const double psi_h = m.psi.back();
  const double len = 5.0 / m.beta;
  m.z_tail.resize(kTailSamples);
  m.psi_tail.resize(kTailSamples);
  for (int i = 0; i < kTailSamples; ++i) {
    const double dz = len * i / (kTailSamples - 1);
    m.z_tail[i] = m.depth + dz;
    m.psi_tail[i] = psi_h * std::exp(-m.beta * dz);
  }
}

std::vector<double> water_grid(const Environment& env, double w, double h) {
  const int n = water_intervals(env, w, h);
  std::vector<double> z(n + 1);
  for (int i = 0; i <= n; ++i) z[i] = h * i / n;
  z[n] = h;
  return z;
}

ModeSolution sample_pekeris(const Environment& env, const Pekeris& p, int l, double w, double x, double y, double h,
                            const std::vector<double>& z) {
  const PekerisRoot r = pekeris_root(p, l, w, h);
  ModeSolution m;
  m.index = l;
  m.w = w;
  m.x = x;
  m.y = y;
  m.depth = h;
  m.q = r.q;
  m.gamma = r.gamma;
  m.beta = r.beta;
  const double sh = std::sin(r.gamma * h);
  const double norm2 =
      p.rb * (0.5 * h - std::sin(2.0 * r.gamma * h) / (4.0 * r.gamma)) + p.rw * sh * sh / (2.0 * r.beta);
  const double a = 1.0 / std::sqrt(norm2);
  m.z = z;
  m.psi.resize(z.size());
  m.dpsi.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    m.psi[i] = a * std::sin(r.gamma * z[i]);
    m.dpsi[i] = a * r.gamma * std::cos(r.gamma * z[i]);
  }
  (void)env;
  fill_tail(m);
  return m;
}

ModeSolution sample_general(const Environment& env, int l, double w, double x, double y, double h,
                            const std::vector<double>& z) {
  const double q = general_wavenumber(env, l, w, h);
  const double nb = env.n_bottom();
  ModeSolution m;
  m.index = l;
  m.w = w;
  m.x = x;
  m.y = y;
  m.depth = h;
  m.q = q;
  m.beta = std::sqrt(q * q - nb * nb * w * w);
  m.z = z;
  m.psi.assign(z.size(), 0.0);
  m.dpsi.assign(z.size(), 0.0);

  // psi'' = (q^2 - n^2 w^2) psi by RK4, four substeps per grid interval.
  const double q2 = q * q, w2 = w * w;
  auto acc = [&](double zz, double u) {
    const double n = env.n_water(zz);
    return (q2 - n * n * w2) * u;
  };
  double u = 0.0, du = 1.0;
  m.dpsi[0] = 1.0;
  constexpr int kSub = 4;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double hs = (z[i + 1] - z[i]) / kSub;
    double zz = z[i];
    for (int s = 0; s < kSub; ++s) {
      const double a1 = du, b1 = acc(zz, u);
      const double a2 = du + 0.5 * hs * b1, b2 = acc(zz + 0.5 * hs, u + 0.5 * hs * a1);
      const double a3 = du + 0.5 * hs * b2, b3 = acc(zz + 0.5 * hs, u + 0.5 * hs * a2);
      const double a4 = du + hs * b3, b4 = acc(zz + hs, u + hs * a3);
      u += hs * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0;
      du += hs * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0;
      zz += hs;
    }
    m.psi[i + 1] = u;
    m.dpsi[i + 1] = du;
  }
  const double water = env.bottom_density() * boole(z, [&](std::size_t i) { return m.psi[i] * m.psi[i]; });
  const double tail = env.water_density() * m.psi.back() * m.psi.back() / (2.0 * m.beta);
  const double a = 1.0 / std::sqrt(water + tail);
  for (auto& v : m.psi) v *= a;
  for (auto& v : m.dpsi) v *= a;
  fill_tail(m);
  return m;
}

}  // namespace

int mode_count(const Environment& env, double w, double x, double y) {
  check_query(w);
  const double h = depth_or_throw(env, x, y);
  if (env.isovelocity()) return pekeris_count(pekeris(env), w, h);
  return Shooter(env, w, h).count();
}

double mode_wavenumber(const Environment& env, int l, double w, double depth) {
  check_query(w);
  if (l < 0) throw Error(ErrorKind::Validation, "mode index must be non-negative", "l");
  if (env.isovelocity()) return pekeris_root(pekeris(env), l, w, depth).q;
  return general_wavenumber(env, l, w, depth);
}

ModeSolution solve_mode(const Environment& env, int l, double w, double x, double y) {
  check_query(w);
  if (l < 0) throw Error(ErrorKind::Validation, "mode index must be non-negative", "l");
  const double h = depth_or_throw(env, x, y);
  const auto z = water_grid(env, w, h);
  if (env.isovelocity()) return sample_pekeris(env, pekeris(env), l, w, x, y, h, z);
  return sample_general(env, l, w, x, y, h, z);
}

std::vector<ModeSolution> solve_modes(const Environment& env, double w, double x, double y) {
  const int m = mode_count(env, w, x, y);
  if (m == 0) throw Error(ErrorKind::NoTrappedModes, "no trapped modes: frequency below the first cutoff");
  const double h = env.depth_at(x, y);
  const auto z = water_grid(env, w, h);
  std::vector<ModeSolution> out;
  out.reserve(m);
  for (int l = 0; l < m; ++l) {
    if (env.isovelocity()) out.push_back(sample_pekeris(env, pekeris(env), l, w, x, y, h, z));
    else out.push_back(sample_general(env, l, w, x, y, h, z));
  }
  return out;
}

double inner_product(const Environment& env, const ModeSolution& a, const ModeSolution& b) {
  if (a.z.size() != b.z.size() || a.z.empty() || a.depth != b.depth || a.z.back() != b.z.back())
    throw Error(ErrorKind::GridMismatch, "modes are sampled on different grids");
  const double water = boole(a.z, [&](std::size_t i) { return a.psi[i] * b.psi[i]; });
  const double tail = a.psi.back() * b.psi.back() / (a.beta + b.beta);
  return env.bottom_density() * water + env.water_density() * tail;
}

double n2_product(const Environment& env, const ModeSolution& m) {
  const double water = boole(m.z, [&](std::size_t i) {
    const double n = env.n_water(m.z[i]);
    return n * n * m.psi[i] * m.psi[i];
  });
  const double nb = env.n_bottom();
  const double tail = nb * nb * m.psi.back() * m.psi.back() / (2.0 * m.beta);
  return env.bottom_density() * water + env.water_density() * tail;
}

double n2_product_identity(const Environment& env, const ModeSolution& m) {
  const double water = boole(m.z, [&](std::size_t i) { return m.dpsi[i] * m.dpsi[i]; });
  const double tail = 0.5 * m.beta * m.psi.back() * m.psi.back();
  const double grad2 = env.bottom_density() * water + env.water_density() * tail;
  return (m.q * m.q + grad2) / (m.w * m.w);
}

double dq_dw(const Environment& env, const ModeSolution& m) { return m.w / m.q * n2_product(env, m); }

Jet<3> dispersion_jet(const Environment& env, int l, double w, double x, double y) {
  check_query(w);
  if (l < 0) throw Error(ErrorKind::Validation, "mode index must be non-negative", "l");
  const double h = depth_or_throw(env, x, y);
  const Jet<2> hxy = env.bathymetry().depth_jet(x, y);
  const Jet<2> qwh = env.isovelocity() ? pekeris_jet(pekeris(env), l, w, h) : general_jet(env, l, w, h);
  const Jet<3> h3 = compose<2, 3>(hxy, {Jet<3>::variable(1, x), Jet<3>::variable(2, y)});
  return compose<2, 3>(qwh, {Jet<3>::variable(0, w), h3});
}

DispersionDerivatives dispersion_derivatives(const Environment& env, int l, double w, double x, double y,
                                             int max_order) {
  if (max_order < 1 || max_order > 3) throw Error(ErrorKind::Validation, "max_order must be 1, 2 or 3", "max_order");
  const Jet<3> j = dispersion_jet(env, l, w, x, y);
  DispersionDerivatives d;
  d.q = j.value();
  for (int a = 0; a < 3; ++a) {
    d.grad[a] = j.d(a);
    for (int b = 0; b < 3 && max_order >= 2; ++b) {
      d.hess[a][b] = j.d(a, b);
      for (int c = 0; c < 3 && max_order >= 3; ++c) d.third[a][b][c] = j.d(a, b, c);
    }
  }
  return d;
}

}  // namespace stray
