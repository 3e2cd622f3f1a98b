#pragma once

// Shared fixtures and independent oracles for the test suite. The oracles
// here (plain midpoint bisection, finite differences) deliberately do not
// share code with the library paths they check.

#include <cmath>
#include <random>

#include "ecodyn/model.hpp"

namespace testutil {

inline ecodyn::ModelConfig fig3_config(double beta = 1.0,
                                       ecodyn::LearningRule rule =
                                           ecodyn::LearningRule::logit) {
  ecodyn::ModelConfig cfg;
  cfg.deltas = {0.5, 0.25, 1.5, -0.5};
  cfg.env = {0.8, 0.5};
  cfg.beta = beta;
  cfg.rule = rule;
  return cfg;
}

inline double uniform(std::mt19937& rng, double lo, double hi) {
  return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Random parameters satisfying all three standing assumptions.
inline ecodyn::ModelConfig random_valid_config(std::mt19937& rng) {
  ecodyn::ModelConfig cfg;
  cfg.deltas.tr1 = uniform(rng, 0.1, 2.0);
  cfg.deltas.ps1 = uniform(rng, 0.1, 2.0);
  cfg.deltas.sp0 = uniform(rng, -2.0, -0.1);
  cfg.deltas.rt0 = -cfg.deltas.sp0 + uniform(rng, 0.1, 2.0);
  cfg.env.theta = uniform(rng, 0.15, 0.95);
  cfg.env.epsilon = uniform(rng, 0.1, 1.0);
  cfg.beta = uniform(rng, 0.1, 10.0);
  return cfg;
}

// Unconstrained (but valid) parameters, for invariance-style properties.
inline ecodyn::ModelConfig random_any_config(std::mt19937& rng) {
  ecodyn::ModelConfig cfg;
  cfg.deltas.tr1 = uniform(rng, -2.0, 2.0);
  cfg.deltas.ps1 = uniform(rng, -2.0, 2.0);
  cfg.deltas.sp0 = uniform(rng, -2.0, 2.0);
  cfg.deltas.rt0 = uniform(rng, -2.0, 2.0);
  cfg.env.theta = uniform(rng, 0.05, 2.0);
  cfg.env.epsilon = uniform(rng, 0.05, 1.0);
  cfg.beta = uniform(rng, 0.0, 20.0);
  cfg.rule = rng() % 2 == 0 ? ecodyn::LearningRule::logit
                            : ecodyn::LearningRule::imitative;
  return cfg;
}

// Midpoint bisection, independent of ecodyn::bisect.
template <class F>
double oracle_bisect(F&& f, double lo, double hi, int iters = 260) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Central finite-difference Jacobian of the vector field.
inline ecodyn::Mat2 fd_jacobian(const ecodyn::ModelConfig& cfg, ecodyn::State s,
                                double h = 1e-6) {
  using ecodyn::vector_field;
  ecodyn::Mat2 j;
  j.a11 = (vector_field(cfg, {s.x + h, s.n}).dx -
           vector_field(cfg, {s.x - h, s.n}).dx) /
          (2.0 * h);
  j.a12 = (vector_field(cfg, {s.x, s.n + h}).dx -
           vector_field(cfg, {s.x, s.n - h}).dx) /
          (2.0 * h);
  j.a21 = (vector_field(cfg, {s.x + h, s.n}).dn -
           vector_field(cfg, {s.x - h, s.n}).dn) /
          (2.0 * h);
  j.a22 = (vector_field(cfg, {s.x, s.n + h}).dn -
           vector_field(cfg, {s.x, s.n - h}).dn) /
          (2.0 * h);
  return j;
}

}  // namespace testutil
