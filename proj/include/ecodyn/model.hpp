#pragma once

// Coupled game-environment model: a population choosing between cooperation
// and defection over a shared renewable resource n in [0,1].
//
// The payoff difference between the two actions is bilinear in the state:
//
//     g(x,n) = a*x*n + b*x + c*n + d
//
// with (a,b,c,d) derived from the four payoff deltas. Two revision rules:
//
//     logit:      dx/dt = rho_C(x,n) - x,   rho_C = 1 / (1 + exp(-beta*g))
//     imitative:  dx/dt = x(1-x) g(x,n)
//
// and in both cases the resource follows the tipping-point dynamics
//
//     dn/dt = eps * n(1-n) * ((1+theta)*x - 1).
//
// The state space Gamma = [0,1]^2 is forward-invariant: dx/dt > 0 at x=0 and
// dx/dt < 0 at x=1 under the logit rule, and dn/dt = 0 on n in {0,1}.

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

namespace ecodyn {

// Payoff deltas: tr1 = T1-R1, ps1 = P1-S1, rt0 = R0-T0, sp0 = S0-P0.
// Only these differences enter the dynamics, never the eight raw entries.
struct PayoffDeltas {
  double tr1 = 0.0;
  double ps1 = 0.0;
  double rt0 = 0.0;
  double sp0 = 0.0;
};

struct EnvParams {
  double theta = 0.8;    // replenishment rate of the resource
  double epsilon = 0.5;  // time-scale separation between n and x
};

enum class LearningRule { logit, imitative };

struct ModelConfig {
  PayoffDeltas deltas;
  EnvParams env;
  double beta = 1.0;  // rationality; 0 = uniform random choice
  LearningRule rule = LearningRule::logit;
};

struct State {
  double x = 0.0;  // cooperator fraction
  double n = 0.0;  // environmental state
};

struct Velocity {
  double dx = 0.0;
  double dn = 0.0;
};

// Coefficients of g plus derived constants used throughout:
//   D     = rt0 + tr1 + theta*(sp0 + ps1)
//   n_bar = (rt0 + theta*sp0) / D        (imitative interior level)
//   x0    = -d/b                         (zero of g(.,0); absent when b = 0)
struct LinearCoeffs {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double D = 0.0;
  double n_bar = 0.0;
  std::optional<double> x0;
};

struct AssumptionReport {
  bool a1_holds = false;  // defection dominant at n=1: tr1 > 0 and ps1 > 0
  bool a2_holds = false;  // 0 < theta < 1
  bool a3_holds = false;  // sp0 < 0 and rt0 > -sp0
  std::string detail;
  bool all_hold() const { return a1_holds && a2_holds && a3_holds; }
};

struct Mat2 {
  double a11 = 0.0, a12 = 0.0;
  double a21 = 0.0, a22 = 0.0;

  double trace() const { return a11 + a22; }
  double det() const { return a11 * a22 - a12 * a21; }

  // Deterministic order: real pair descending, complex pair with +Im first.
  std::array<std::complex<double>, 2> eigenvalues() const {
    const double half_tr = 0.5 * trace();
    const double disc = half_tr * half_tr - det();
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      return {std::complex<double>(half_tr + s, 0.0),
              std::complex<double>(half_tr - s, 0.0)};
    }
    const double w = std::sqrt(-disc);
    return {std::complex<double>(half_tr, w), std::complex<double>(half_tr, -w)};
  }
};

inline void validate(const ModelConfig& cfg) {
  if (!std::isfinite(cfg.beta) || cfg.beta < 0.0)
    throw std::invalid_argument("beta must be finite and non-negative");
  if (!(cfg.env.theta > 0.0) || !std::isfinite(cfg.env.theta))
    throw std::invalid_argument("theta must be positive and finite");
  if (!(cfg.env.epsilon > 0.0) || !std::isfinite(cfg.env.epsilon))
    throw std::invalid_argument("epsilon must be positive and finite");
}

inline LinearCoeffs derive_coeffs(const PayoffDeltas& pd, const EnvParams& env) {
  LinearCoeffs k;
  k.a = pd.sp0 - pd.rt0 + pd.ps1 - pd.tr1;
  k.b = pd.rt0 - pd.sp0;
  k.c = -(pd.ps1 + pd.sp0);
  k.d = pd.sp0;
  k.D = pd.rt0 + pd.tr1 + env.theta * (pd.sp0 + pd.ps1);
  k.n_bar = (pd.rt0 + env.theta * pd.sp0) / k.D;
  if (k.b != 0.0) k.x0 = -k.d / k.b;
  return k;
}

inline double payoff_diff(const LinearCoeffs& k, State s) {
  return k.a * s.x * s.n + k.b * s.x + k.c * s.n + k.d;
}

// rho_C = e^{beta g} / (1 + e^{beta g}), evaluated on the non-growing branch
// so it never overflows for any representable beta*g.
inline double logit_prob(double beta, double g) {
  const double bg = beta * g;
  if (bg >= 0.0) return 1.0 / (1.0 + std::exp(-bg));
  const double e = std::exp(bg);
  return e / (1.0 + e);
}

// dn/dt shared by both rules.
inline double env_velocity(const EnvParams& env, State s) {
  return env.epsilon * s.n * (1.0 - s.n) * ((1.0 + env.theta) * s.x - 1.0);
}

inline Velocity vector_field(const ModelConfig& cfg, State s) {
  const LinearCoeffs k = derive_coeffs(cfg.deltas, cfg.env);
  const double g = payoff_diff(k, s);
  Velocity v;
  v.dx = cfg.rule == LearningRule::logit ? logit_prob(cfg.beta, g) - s.x
                                         : s.x * (1.0 - s.x) * g;
  v.dn = env_velocity(cfg.env, s);
  return v;
}

// Max-norm of the vector field; zero at fixed points.
inline double residual_max_norm(const ModelConfig& cfg, State s) {
  const Velocity v = vector_field(cfg, s);
  return std::max(std::abs(v.dx), std::abs(v.dn));
}

// Jacobian of the flow. Analytic for the logit rule:
//   J11 = beta * dg/dx * rho(1-rho) - 1      dg/dx = a*n + b
//   J12 = beta * dg/dn * rho(1-rho)          dg/dn = a*x + c
//   J21 = eps * n(1-n)(1+theta)
//   J22 = eps * (1-2n)((1+theta)x - 1)
// The imitative rule uses central finite differences.
inline Mat2 jacobian(const ModelConfig& cfg, State s) {
  const EnvParams& env = cfg.env;
  Mat2 j;
  j.a21 = env.epsilon * s.n * (1.0 - s.n) * (1.0 + env.theta);
  j.a22 = env.epsilon * (1.0 - 2.0 * s.n) * ((1.0 + env.theta) * s.x - 1.0);
  if (cfg.rule == LearningRule::logit) {
    const LinearCoeffs k = derive_coeffs(cfg.deltas, cfg.env);
    const double rho = logit_prob(cfg.beta, payoff_diff(k, s));
    const double slope = rho * (1.0 - rho);  // e^{bg}/(1+e^{bg})^2
    j.a11 = cfg.beta * (k.a * s.n + k.b) * slope - 1.0;
    j.a12 = cfg.beta * (k.a * s.x + k.c) * slope;
  } else {
    const double h = 1e-6;
    auto fx = [&](State p) { return vector_field(cfg, p).dx; };
    j.a11 = (fx({s.x + h, s.n}) - fx({s.x - h, s.n})) / (2.0 * h);
    j.a12 = (fx({s.x, s.n + h}) - fx({s.x, s.n - h})) / (2.0 * h);
  }
  return j;
}

inline AssumptionReport check_assumptions(const ModelConfig& cfg) {
  const PayoffDeltas& pd = cfg.deltas;
  AssumptionReport r;
  r.a1_holds = pd.tr1 > 0.0 && pd.ps1 > 0.0;
  r.a2_holds = cfg.env.theta > 0.0 && cfg.env.theta < 1.0;
  r.a3_holds = pd.sp0 < 0.0 && pd.rt0 > -pd.sp0;
  r.detail = std::string("A1 (defection dominant at n=1): ") +
             (r.a1_holds ? "holds" : "fails") +
             "; A2 (theta < 1): " + (r.a2_holds ? "holds" : "fails") +
             "; A3 (sp0 < 0 < -sp0 < rt0): " + (r.a3_holds ? "holds" : "fails");
  return r;
}

inline const char* to_string(LearningRule r) {
  return r == LearningRule::logit ? "logit" : "imitative";
}

}  // namespace ecodyn
