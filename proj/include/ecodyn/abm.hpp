#pragma once

// Finite-population realization of the logit revision protocol, used to
// check that the mean dynamics is the right large-population limit.
//
// Revision opportunities arrive as a population-level Poisson process of
// rate N (one unit-rate exponential clock per agent). The revising agent is
// drawn uniformly; it adopts cooperation with probability rho_C(x, n) where
// x is the current empirical cooperator fraction. Between events the
// resource follows its deterministic law, advanced by explicit Euler in
// substeps of env_step.
//
// All randomness derives from an mt19937_64 stream through fixed-layout
// draws (uniform via the 53-bit mantissa trick, exponential by inversion),
// so a seed pins the trajectory bit-for-bit. Draw order per event:
// waiting time, revising agent, adopted strategy.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "ecodyn/integrate.hpp"
#include "ecodyn/model.hpp"

namespace ecodyn {

struct AbmConfig {
  ModelConfig model;
  std::size_t agents = 100;
  std::uint64_t seed = 0;
  double t_end = 50.0;
  double env_step = 0.01;
  State s0{0.5, 0.5};
  std::size_t record_stride = 1;  // keep every k-th revision event
};

struct AbmTrajectory {
  std::vector<double> times;
  std::vector<double> x_fraction;
  std::vector<double> n_env;
  std::size_t revision_count = 0;
  std::size_t clamp_events = 0;
};

struct DeviationStats {
  double sup_x = 0.0, sup_n = 0.0;
  double mean_abs_x = 0.0, mean_abs_n = 0.0;
  double sup() const { return sup_x > sup_n ? sup_x : sup_n; }
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double exponential(std::mt19937_64& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace detail

inline AbmTrajectory run_abm(const AbmConfig& cfg) {
  validate(cfg.model);
  if (cfg.model.rule != LearningRule::logit)
    throw std::invalid_argument("run_abm: logit rule only");
  if (cfg.agents < 2) throw std::invalid_argument("run_abm: need >= 2 agents");
  if (!(cfg.env_step > 0.0))
    throw std::invalid_argument("run_abm: env_step must be > 0");
  if (!(cfg.t_end > 0.0)) throw std::invalid_argument("run_abm: t_end must be > 0");
  if (!(cfg.s0.x >= 0.0 && cfg.s0.x <= 1.0 && cfg.s0.n >= 0.0 && cfg.s0.n <= 1.0))
    throw std::invalid_argument("run_abm: s0 outside [0,1]^2");
  if (cfg.record_stride == 0)
    throw std::invalid_argument("run_abm: record_stride must be >= 1");

  const LinearCoeffs k = derive_coeffs(cfg.model.deltas, cfg.model.env);
  const double N = static_cast<double>(cfg.agents);
  long long coop = std::llround(cfg.s0.x * N);
  if (coop < 0) coop = 0;
  if (coop > static_cast<long long>(cfg.agents))
    coop = static_cast<long long>(cfg.agents);
  double n = cfg.s0.n;
  double t = 0.0;

  AbmTrajectory out;
  auto record = [&](double time) {
    out.times.push_back(time);
    out.x_fraction.push_back(static_cast<double>(coop) / N);
    out.n_env.push_back(n);
  };
  auto advance_env = [&](double x, double span) {
    double rem = span;
    while (rem > 0.0) {
      const double h = rem < cfg.env_step ? rem : cfg.env_step;
      n += h * env_velocity(cfg.model.env, {x, n});
      if (n < 0.0) {
        n = 0.0;
        ++out.clamp_events;
      } else if (n > 1.0) {
        n = 1.0;
        ++out.clamp_events;
      }
      rem -= h;
    }
  };

  std::mt19937_64 rng(cfg.seed);
  record(0.0);
  for (;;) {
    const double dt = detail::exponential(rng, N);
    if (t + dt >= cfg.t_end) {
      advance_env(static_cast<double>(coop) / N, cfg.t_end - t);
      record(cfg.t_end);
      break;
    }
    advance_env(static_cast<double>(coop) / N, dt);
    t += dt;
    const double x = static_cast<double>(coop) / N;
    const bool was_coop = detail::uniform01(rng) * N < static_cast<double>(coop);
    const double p = logit_prob(cfg.model.beta, payoff_diff(k, {x, n}));
    const bool now_coop = detail::uniform01(rng) < p;
    coop += (now_coop ? 1 : 0) - (was_coop ? 1 : 0);
    ++out.revision_count;
    if (out.revision_count % cfg.record_stride == 0) record(t);
  }
  return out;
}

// Deviation of an event path from an ODE path, evaluated on the ODE time
// grid with nearest-event lookup, over the overlapping time range.
inline DeviationStats compare_abm_ode(const AbmTrajectory& abm,
                                      const Trajectory& ode) {
  if (abm.times.empty() || ode.times.empty())
    throw std::invalid_argument("compare_abm_ode: empty trajectory");
  const double t_lo = std::max(abm.times.front(), ode.times.front());
  const double t_hi = std::min(abm.times.back(), ode.times.back());
  if (!(t_lo <= t_hi))
    throw std::invalid_argument("compare_abm_ode: time ranges do not overlap");

  DeviationStats dev;
  std::size_t count = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < ode.times.size(); ++i) {
    const double t = ode.times[i];
    if (t < t_lo || t > t_hi) continue;
    while (j + 1 < abm.times.size() && abm.times[j + 1] <= t) ++j;
    std::size_t nearest = j;
    if (j + 1 < abm.times.size() &&
        abm.times[j + 1] - t < t - abm.times[j])
      nearest = j + 1;
    const double dx = std::abs(ode.states[i].x - abm.x_fraction[nearest]);
    const double dn = std::abs(ode.states[i].n - abm.n_env[nearest]);
    dev.sup_x = std::max(dev.sup_x, dx);
    dev.sup_n = std::max(dev.sup_n, dn);
    dev.mean_abs_x += dx;
    dev.mean_abs_n += dn;
    ++count;
  }
  if (count == 0)
    throw std::invalid_argument("compare_abm_ode: no common samples");
  dev.mean_abs_x /= static_cast<double>(count);
  dev.mean_abs_n /= static_cast<double>(count);
  return dev;
}

}  // namespace ecodyn
