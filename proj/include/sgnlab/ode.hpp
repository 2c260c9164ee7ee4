// Adaptive Dormand-Prince 5(4) integration for small autonomous-or-not systems.
#ifndef SGNLAB_ODE_HPP
#define SGNLAB_ODE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgnlab {

struct OdeOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  double initial_step = 1e-3;
  double max_step = 0.0;  ///< 0 means unbounded
  long max_steps = 1000000;
};

/// One embedded step; returns the 5th-order solution and writes the error vector.
template <typename Vector, typename Rhs, typename Scalar>
Vector dormand_prince_step(Rhs&& rhs, Scalar t, const Vector& y, Scalar h, Vector& err) {
  const Vector k1 = rhs(t, y);
  const Vector k2 = rhs(t + h / 5, Vector(y + h * (k1 / 5)));
  const Vector k3 = rhs(t + 3 * h / 10, Vector(y + h * (3 * k1 / 40 + 9 * k2 / 40)));
  const Vector k4 =
      rhs(t + 4 * h / 5, Vector(y + h * (44 * k1 / 45 - 56 * k2 / 15 + 32 * k3 / 9)));
  const Vector k5 = rhs(t + 8 * h / 9, Vector(y + h * (19372 * k1 / 6561 - 25360 * k2 / 2187 +
                                                       64448 * k3 / 6561 - 212 * k4 / 729)));
  const Vector k6 = rhs(t + h, Vector(y + h * (9017 * k1 / 3168 - 355 * k2 / 33 +
                                               46732 * k3 / 5247 + 49 * k4 / 176 -
                                               5103 * k5 / 18656)));
  const Vector y5 = y + h * (35 * k1 / 384 + 500 * k3 / 1113 + 125 * k4 / 192 -
                             2187 * k5 / 6784 + 11 * k6 / 84);
  const Vector k7 = rhs(t + h, y5);
  const Vector y4 = y + h * (5179 * k1 / 57600 + 7571 * k3 / 16695 + 393 * k4 / 640 -
                             92097 * k5 / 339200 + 187 * k6 / 2100 + k7 / 40);
  err = y5 - y4;
  return y5;
}

/// Integrates y' = rhs(t, y) from t0 to t1 with step-size control.
///
/// `observer(t, y)` is called after every accepted step and may return
/// false to stop early; the final (t, y) is returned either way.
template <typename Vector, typename Rhs, typename Observer>
std::pair<double, Vector> integrate_ode(Rhs&& rhs, double t0, const Vector& y0, double t1,
                                        Observer&& observer, const OdeOptions& opts = {}) {
  double t = t0;
  Vector y = y0;
  const double direction = t1 >= t0 ? 1.0 : -1.0;
  double h = direction * std::min(std::abs(opts.initial_step), std::abs(t1 - t0));
  Vector err = y;
  for (long step = 0; step < opts.max_steps; ++step) {
    if ((t1 - t) * direction <= 0) break;
    if ((t + h - t1) * direction > 0) h = t1 - t;
    const Vector trial = dormand_prince_step(rhs, t, y, h, err);
    double norm = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale =
          opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(trial[i]));
      norm = std::max(norm, std::abs(err[i]) / scale);
    }
    if (!std::isfinite(norm)) {
      h /= 4;
      continue;
    }
    if (norm <= 1.0) {
      t += h;
      y = trial;
      if (!observer(t, y)) return {t, y};
    }
    const double factor = norm == 0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
    h *= factor;
    if (opts.max_step > 0) h = direction * std::min(std::abs(h), opts.max_step);
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) {
      throw std::runtime_error("integrate_ode: step size underflow");
    }
  }
  return {t, y};
}

}  // namespace sgnlab

#endif  // SGNLAB_ODE_HPP
