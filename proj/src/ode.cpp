#include "stray/ode.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "stray/errors.hpp"

namespace stray {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// Fifth minus fourth order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

}  // namespace

DormandPrince::DormandPrince(OdeRhs rhs, OdeOptions opts) : rhs_(std::move(rhs)), opts_(opts) {
  if (!(opts_.rtol > 0.0) || !(opts_.atol >= 0.0))
    throw Error(ErrorKind::Config, "integration tolerances must be positive", "rtol");
}

void DormandPrince::step(double t, const Eigen::VectorXd& y, const Eigen::VectorXd& dy, double h,
                         Eigen::VectorXd& y1, Eigen::VectorXd* err) {
  auto& [k1, k2, k3, k4, k5, k6, k7] = k_;
  const Eigen::Index n = y.size();
  for (auto& k : k_) k.resize(n);
  k1 = dy;
  tmp_ = y + h * a21 * k1;
  rhs_(t + c2 * h, tmp_, k2);
  tmp_ = y + h * (a31 * k1 + a32 * k2);
  rhs_(t + c3 * h, tmp_, k3);
  tmp_ = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
  rhs_(t + c4 * h, tmp_, k4);
  tmp_ = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
  rhs_(t + c5 * h, tmp_, k5);
  tmp_ = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
  rhs_(t + h, tmp_, k6);
  y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
  evals_ += 5;
  if (err) {
    rhs_(t + h, y1, k7);
    ++evals_;
    *err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  }
}

double DormandPrince::error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                                 const Eigen::VectorXd& y1) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(err.size()));
}

double DormandPrince::initial_step(double t0, const Eigen::VectorXd& y0, const Eigen::VectorXd& f0, double span) {
  // Hairer & Wanner's starting step heuristic.
  auto scaled = [&](const Eigen::VectorXd& v) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double r = v[i] / (opts_.atol + opts_.rtol * std::abs(y0[i]));
      s += r * r;
    }
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  const double d0 = scaled(y0), d1 = scaled(f0);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  Eigen::VectorXd y1 = y0 + h0 * f0, f1(y0.size());
  rhs_(t0 + h0, y1, f1);
  ++evals_;
  const double d2 = scaled(f1 - f0) / h0;
  const double dm = std::max(d1, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6 * span, 1e-3 * h0) : std::pow(0.01 / dm, 0.2);
  return std::min({100.0 * h0, h1, span});
}

OdeStats DormandPrince::integrate(double t0, const Eigen::VectorXd& y0, const std::vector<double>& knots,
                                  const OdeObserver& observer) {
  OdeStats stats;
  evals_ = 0;
  Eigen::VectorXd y = y0, dy(y0.size()), y1(y0.size()), err(y0.size()), dy1(y0.size());
  double t = t0;
  rhs_(t, y, dy);
  ++evals_;
  if (observer && !observer(t, y, dy)) {
    stats.stopped = true;
    stats.evaluations = evals_;
    return stats;
  }
  if (knots.empty() || !(knots.back() > t0)) {
    stats.evaluations = evals_;
    return stats;
  }
  const double span = knots.back() - t0;
  double h = opts_.initial_step > 0.0 ? opts_.initial_step : initial_step(t, y, dy, span);
  if (opts_.max_step > 0.0) h = std::min(h, opts_.max_step);

  std::size_t next = 0;
  while (next < knots.size() && knots[next] <= t) ++next;
  while (next < knots.size()) {
    if (stats.accepted + stats.rejected >= opts_.max_steps)
      throw Error(ErrorKind::StepFailure, "step budget exhausted at t = " + std::to_string(t));
    const double target = knots[next];
    bool lands = false;
    double hs = h;
    if (t + hs >= target || t + 1.01 * hs >= target) {
      hs = target - t;
      lands = true;
    }
    const double h_floor = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    double e;
    try {
      step(t, y, dy, hs, y1, &err);
      e = error_norm(err, y, y1);
      if (!std::isfinite(e)) e = 1e10;
    } catch (const Error&) {
      if (hs <= h_floor) throw;
      h = 0.5 * hs;
      ++stats.rejected;
      continue;
    }
    if (e <= 1.0) {
      t = lands ? target : t + hs;
      y.swap(y1);
      dy = k_[6];
      ++stats.accepted;
      if (lands) ++next;
      const double fac = e == 0.0 ? kMaxFactor : std::clamp(kSafety * std::pow(e, -0.2), kMinFactor, kMaxFactor);
      // Keep the unclipped step when the last one was shortened to hit a knot.
      h = lands ? std::max(h, hs * fac) : hs * fac;
      if (opts_.max_step > 0.0) h = std::min(h, opts_.max_step);
      if (observer && !observer(t, y, dy)) {
        stats.stopped = true;
        break;
      }
    } else {
      ++stats.rejected;
      h = hs * std::max(kMinFactor, kSafety * std::pow(e, -0.2));
      if (h <= h_floor) throw Error(ErrorKind::StepFailure, "step size underflow at t = " + std::to_string(t));
    }
  }
  stats.evaluations = evals_;
  return stats;
}

Eigen::VectorXd hermite(double t0, const Eigen::VectorXd& y0, const Eigen::VectorXd& dy0, double t1,
                        const Eigen::VectorXd& y1, const Eigen::VectorXd& dy1, double t) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * y0 + h10 * h * dy0 + h01 * y1 + h11 * h * dy1;
}

}  // namespace stray
