#pragma once

// Explicit Runge-Kutta integration of the model flow over Gamma = [0,1]^2.
// Classic fixed-step RK4 by default; embedded Dormand-Prince 4(5) with
// absolute/relative error control as the adaptive option.
//
// The exact flow never leaves Gamma, so after each accepted step the state
// is snapped back onto the square when the discretization has pushed it out
// by at most invariance_tol; a larger excursion means a mis-configured run
// or an integrator defect and aborts.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ecodyn/model.hpp"

namespace ecodyn {

struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StepMethod { rk4, adaptive45 };

struct StepControl {
  StepMethod method = StepMethod::rk4;
  double h = 0.01;          // fixed-step size
  double abs_tol = 1e-9;    // adaptive error control
  double rel_tol = 1e-7;
  double h_min = 1e-10;
  double h_max = 0.05;      // keeps section crossings well resolved
  double invariance_tol = 1e-9;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::size_t steps_accepted = 0;
  std::size_t steps_rejected = 0;
  LearningRule rule = LearningRule::logit;
};

struct StepStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

namespace detail {

inline double clamp_coord(double v, double tol, std::size_t& clamped) {
  if (v < 0.0) {
    if (v < -tol) {
      std::ostringstream msg;
      msg << "state left [0,1]^2 by " << -v << " (tolerance " << tol << ")";
      throw IntegrationError(msg.str());
    }
    ++clamped;
    return 0.0;
  }
  if (v > 1.0) {
    if (v > 1.0 + tol) {
      std::ostringstream msg;
      msg << "state left [0,1]^2 by " << v - 1.0 << " (tolerance " << tol << ")";
      throw IntegrationError(msg.str());
    }
    ++clamped;
    return 1.0;
  }
  return v;
}

inline State clamp_state(State s, double tol) {
  std::size_t dummy = 0;
  s.x = clamp_coord(s.x, tol, dummy);
  s.n = clamp_coord(s.n, tol, dummy);
  return s;
}

inline State rk4_step(const ModelConfig& cfg, State s, double h) {
  const Velocity k1 = vector_field(cfg, s);
  const Velocity k2 =
      vector_field(cfg, {s.x + 0.5 * h * k1.dx, s.n + 0.5 * h * k1.dn});
  const Velocity k3 =
      vector_field(cfg, {s.x + 0.5 * h * k2.dx, s.n + 0.5 * h * k2.dn});
  const Velocity k4 = vector_field(cfg, {s.x + h * k3.dx, s.n + h * k3.dn});
  return {s.x + h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
          s.n + h / 6.0 * (k1.dn + 2.0 * k2.dn + 2.0 * k3.dn + k4.dn)};
}

// Dormand-Prince 4(5): fifth-order propagation, embedded fourth-order
// solution for the error estimate.
struct Dopri45Result {
  State y5;
  double err_x;
  double err_n;
};

inline Dopri45Result dopri45_step(const ModelConfig& cfg, State s, double h) {
  auto f = [&](double dx, double dn) {
    return vector_field(cfg, {s.x + h * dx, s.n + h * dn});
  };
  const Velocity k1 = vector_field(cfg, s);
  const Velocity k2 = f(0.2 * k1.dx, 0.2 * k1.dn);
  const Velocity k3 = f(3.0 / 40 * k1.dx + 9.0 / 40 * k2.dx,
                        3.0 / 40 * k1.dn + 9.0 / 40 * k2.dn);
  const Velocity k4 =
      f(44.0 / 45 * k1.dx - 56.0 / 15 * k2.dx + 32.0 / 9 * k3.dx,
        44.0 / 45 * k1.dn - 56.0 / 15 * k2.dn + 32.0 / 9 * k3.dn);
  const Velocity k5 = f(19372.0 / 6561 * k1.dx - 25360.0 / 2187 * k2.dx +
                            64448.0 / 6561 * k3.dx - 212.0 / 729 * k4.dx,
                        19372.0 / 6561 * k1.dn - 25360.0 / 2187 * k2.dn +
                            64448.0 / 6561 * k3.dn - 212.0 / 729 * k4.dn);
  const Velocity k6 =
      f(9017.0 / 3168 * k1.dx - 355.0 / 33 * k2.dx + 46732.0 / 5247 * k3.dx +
            49.0 / 176 * k4.dx - 5103.0 / 18656 * k5.dx,
        9017.0 / 3168 * k1.dn - 355.0 / 33 * k2.dn + 46732.0 / 5247 * k3.dn +
            49.0 / 176 * k4.dn - 5103.0 / 18656 * k5.dn);
  const double y5x = s.x + h * (35.0 / 384 * k1.dx + 500.0 / 1113 * k3.dx +
                                125.0 / 192 * k4.dx - 2187.0 / 6784 * k5.dx +
                                11.0 / 84 * k6.dx);
  const double y5n = s.n + h * (35.0 / 384 * k1.dn + 500.0 / 1113 * k3.dn +
                                125.0 / 192 * k4.dn - 2187.0 / 6784 * k5.dn +
                                11.0 / 84 * k6.dn);
  const Velocity k7 = vector_field(cfg, {y5x, y5n});
  const double y4x =
      s.x + h * (5179.0 / 57600 * k1.dx + 7571.0 / 16695 * k3.dx +
                 393.0 / 640 * k4.dx - 92097.0 / 339200 * k5.dx +
                 187.0 / 2100 * k6.dx + 1.0 / 40 * k7.dx);
  const double y4n =
      s.n + h * (5179.0 / 57600 * k1.dn + 7571.0 / 16695 * k3.dn +
                 393.0 / 640 * k4.dn - 92097.0 / 339200 * k5.dn +
                 187.0 / 2100 * k6.dn + 1.0 / 40 * k7.dn);
  return {{y5x, y5n}, y5x - y4x, y5n - y4n};
}

}  // namespace detail

// Core driver. The observer receives every accepted step, including the
// initial state at t = 0, and may return false to stop the run early.
template <class Observer>
StepStats integrate_observe(const ModelConfig& cfg, State s0, double t_end,
                            const StepControl& ctrl, Observer&& observe) {
  validate(cfg);
  if (!(t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be > 0");
  if (!(s0.x >= 0.0 && s0.x <= 1.0 && s0.n >= 0.0 && s0.n <= 1.0))
    throw std::invalid_argument("integrate: initial state outside [0,1]^2");

  StepStats stats;
  State s = s0;
  if (!observe(0.0, s)) return stats;

  if (ctrl.method == StepMethod::rk4) {
    if (!(ctrl.h > 0.0)) throw std::invalid_argument("integrate: h must be > 0");
    const auto n_steps =
        static_cast<std::size_t>(std::ceil(t_end / ctrl.h - 1e-9));
    for (std::size_t i = 1; i <= n_steps; ++i) {
      const double t_next = i == n_steps ? t_end : static_cast<double>(i) * ctrl.h;
      const double t_prev = static_cast<double>(i - 1) * ctrl.h;
      s = detail::clamp_state(detail::rk4_step(cfg, s, t_next - t_prev),
                              ctrl.invariance_tol);
      ++stats.accepted;
      if (!observe(t_next, s)) break;
    }
    return stats;
  }

  double t = 0.0;
  double h = std::min(ctrl.h, ctrl.h_max);
  while (t < t_end) {
    h = std::min(h, t_end - t);
    const auto trial = detail::dopri45_step(cfg, s, h);
    const double sc_x =
        ctrl.abs_tol + ctrl.rel_tol * std::max(std::abs(s.x), std::abs(trial.y5.x));
    const double sc_n =
        ctrl.abs_tol + ctrl.rel_tol * std::max(std::abs(s.n), std::abs(trial.y5.n));
    const double ex = trial.err_x / sc_x;
    const double en = trial.err_n / sc_n;
    const double err = std::sqrt(0.5 * (ex * ex + en * en));
    double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    factor = std::min(5.0, std::max(0.2, factor));
    if (err <= 1.0) {
      t += h;
      s = detail::clamp_state(trial.y5, ctrl.invariance_tol);
      ++stats.accepted;
      if (!observe(t, s)) break;
    } else {
      ++stats.rejected;
    }
    h = std::min(h * factor, ctrl.h_max);
    if (h < ctrl.h_min && t < t_end)
      throw IntegrationError("integrate: step size underflow");
  }
  return stats;
}

inline Trajectory integrate(const ModelConfig& cfg, State s0, double t_end,
                            const StepControl& ctrl = {}) {
  Trajectory traj;
  traj.rule = cfg.rule;
  const StepStats stats =
      integrate_observe(cfg, s0, t_end, ctrl, [&](double t, State s) {
        traj.times.push_back(t);
        traj.states.push_back(s);
        return true;
      });
  traj.steps_accepted = stats.accepted;
  traj.steps_rejected = stats.rejected;
  return traj;
}

}  // namespace ecodyn
