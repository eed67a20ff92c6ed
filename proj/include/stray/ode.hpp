#pragma once

// Adaptive Dormand-Prince 5(4) integrator with exact landing on output knots.

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace stray {

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  /// First trial step; 0 picks one from the initial slope.
  double initial_step = 0.0;
  /// Largest allowed step; 0 means unbounded.
  double max_step = 0.0;
  long max_steps = 200000;
};

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy)>;

/// Called for the initial point and after every accepted step. Returning false stops
/// the integration after that step.
using OdeObserver = std::function<bool(double t, const Eigen::VectorXd& y, const Eigen::VectorXd& dy)>;

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
  bool stopped = false;  // observer asked to stop
};

class DormandPrince {
 public:
  DormandPrince(OdeRhs rhs, OdeOptions opts);

  /// Integrate from (t0, y0) through every knot (ascending, beyond t0), landing on each.
  /// An exception thrown by the right-hand side during a trial step halves the step;
  /// it propagates once the step falls below the resolution of t.
  OdeStats integrate(double t0, const Eigen::VectorXd& y0, const std::vector<double>& knots,
                     const OdeObserver& observer);

  /// One explicit step of size h from (t, y) with slope dy; fills y1 (and its error estimate).
  void step(double t, const Eigen::VectorXd& y, const Eigen::VectorXd& dy, double h, Eigen::VectorXd& y1,
            Eigen::VectorXd* err = nullptr);

  const OdeOptions& options() const { return opts_; }

 private:
  double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0, const Eigen::VectorXd& y1) const;
  double initial_step(double t0, const Eigen::VectorXd& y0, const Eigen::VectorXd& f0, double span);

  OdeRhs rhs_;
  OdeOptions opts_;
  Eigen::VectorXd k_[7];
  Eigen::VectorXd tmp_;
  long evals_ = 0;
};

/// Cubic Hermite interpolation between (t0, y0, dy0) and (t1, y1, dy1).
Eigen::VectorXd hermite(double t0, const Eigen::VectorXd& y0, const Eigen::VectorXd& dy0, double t1,
                        const Eigen::VectorXd& y1, const Eigen::VectorXd& dy1, double t);

}  // namespace stray
