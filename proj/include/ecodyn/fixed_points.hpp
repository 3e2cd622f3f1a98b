#pragma once

// Fixed-point families of the logit system and their local stability.
//
// With n pinned to a boundary, the equilibrium condition rho_C(x,n) = x
// reduces to a scalar equation between a line and the logit transform
//
//     T_beta(x) = (1/beta) * log(x/(1-x)):
//
//     n = 0 (collapsed resource):   b*x + d         = T_beta(x)
//     n = 1 (full resource):        (a+b)*x + c + d = T_beta(x)
//
// T_beta is strictly increasing, odd about x = 1/2, concave below 1/2 and
// convex above, which brackets every root:
//   - exactly one collapsed-resource root above 1/2 (x_toc3), always;
//   - a lower pair (x_toc1 <= x_toc2 < 1/2) appearing at the tangency
//     rationality beta_hat, where the line touches T_beta at
//     x_b = 1/2 - (1/2)sqrt(1 - 4/(beta*b));
//   - one full-resource root below 1/2.
// The unique interior fixed point sits at x_int = 1/(1+theta) and exists
// for beta above beta_int = (1+theta) log(1/theta) / (rt0 + theta*sp0).
//
// The interior point loses stability at
//
//   beta_h = (a*n_bar + b)^-1 (theta(1+1/theta)^2 + a(1+theta)/D log(1/theta))
//
// where its Jacobian trace crosses zero with positive determinant: a Hopf
// bifurcation with eigenvalues +-i sqrt(det).

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ecodyn/model.hpp"
#include "ecodyn/roots.hpp"

namespace ecodyn {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class FpFamily {
  toc1,
  toc2,
  toc3,
  interior,
  prosperity,
  degenerate_line,
  beta0_toc,
  beta0_prosperity,
};

enum class Stability {
  stable_node,
  stable_focus,
  unstable_node,
  unstable_focus,
  saddle,
  center_candidate,
  nonhyperbolic,
};

struct FixedPoint {
  State location;
  FpFamily family = FpFamily::interior;
  std::array<std::complex<double>, 2> eigenvalues{};
  Stability stability = Stability::nonhyperbolic;
};

struct Thresholds {
  double beta_int = 0.0;
  std::optional<double> beta_hat;
  double beta_h = 0.0;
};

inline const char* to_string(FpFamily f) {
  switch (f) {
    case FpFamily::toc1: return "toc1";
    case FpFamily::toc2: return "toc2";
    case FpFamily::toc3: return "toc3";
    case FpFamily::interior: return "interior";
    case FpFamily::prosperity: return "prosperity";
    case FpFamily::degenerate_line: return "degenerate_line";
    case FpFamily::beta0_toc: return "beta0_toc";
    case FpFamily::beta0_prosperity: return "beta0_prosperity";
  }
  return "?";
}

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::stable_node: return "stable_node";
    case Stability::stable_focus: return "stable_focus";
    case Stability::unstable_node: return "unstable_node";
    case Stability::unstable_focus: return "unstable_focus";
    case Stability::saddle: return "saddle";
    case Stability::center_candidate: return "center_candidate";
    case Stability::nonhyperbolic: return "nonhyperbolic";
  }
  return "?";
}

inline bool is_stable(Stability s) {
  return s == Stability::stable_node || s == Stability::stable_focus;
}

inline bool is_toc(FpFamily f) {
  return f == FpFamily::toc1 || f == FpFamily::toc2 || f == FpFamily::toc3 ||
         f == FpFamily::beta0_toc;
}

inline double t_beta(double beta, double x) {
  if (!(beta > 0.0)) throw std::domain_error("t_beta: beta must be positive");
  if (!(x > 0.0 && x < 1.0))
    throw std::domain_error("t_beta: x must lie in (0,1)");
  return std::log(x / (1.0 - x)) / beta;
}

inline double beta_int(const LinearCoeffs& k, const EnvParams& env) {
  // rt0 + theta*sp0 recovered from the coefficients: rt0 = b + d, sp0 = d.
  const double denom = k.b + k.d * (1.0 + env.theta);
  if (!(denom > 0.0))
    throw std::domain_error("beta_int: rt0 + theta*sp0 must be positive");
  return (1.0 + env.theta) * std::log(1.0 / env.theta) / denom;
}

inline double beta_hopf(const LinearCoeffs& k, const EnvParams& env) {
  const double s = k.a * k.n_bar + k.b;
  if (!(s > 0.0)) throw std::domain_error("beta_hopf: a*n_bar + b must be positive");
  const double th = env.theta;
  return (th * (1.0 + 1.0 / th) * (1.0 + 1.0 / th) +
          k.a * (1.0 + th) / k.D * std::log(1.0 / th)) /
         s;
}

// Tangency abscissa of the collapsed-resource equation, defined for beta*b > 4.
inline double toc_tangency_x(double beta, double b) {
  return 0.5 - 0.5 * std::sqrt(1.0 - 4.0 / (beta * b));
}

inline std::optional<double> beta_hat(const LinearCoeffs& k,
                                      double beta_max = 1e3) {
  if (!(k.b > 0.0)) throw std::domain_error("beta_hat: requires b > 0");
  // Positive gap <=> the line dips below T_beta at the matched-slope point,
  // i.e. the lower root pair exists.
  auto gap = [&](double beta) {
    const double xb = toc_tangency_x(beta, k.b);
    return t_beta(beta, xb) - (k.b * xb + k.d);
  };
  const double lo = 4.0 / k.b * (1.0 + 1e-12);
  if (gap(lo) >= 0.0 || gap(beta_max) <= 0.0) return std::nullopt;
  return bisect(gap, lo, beta_max, 1e-10);
}

namespace detail {

constexpr double kEdgeClip = 1e-12;    // keeps T_beta away from its poles
constexpr double kMergeTol = 1e-6;     // tangent roots closer than this merge
constexpr double kResidualTol = 1e-10;

// Solves line(x) = T_beta(x) for a root that lies between an endpoint of
// (0,1) and the clip margin. Works on log(distance-to-edge) so roots down at
// the underflow limit are still resolved; returns the edge itself when the
// root is no longer representable (the correctly rounded answer).
template <class Line>
double solve_near_edge(double beta, Line&& line, bool near_one) {
  auto f = [&](double u) {
    const double y = std::exp(u);  // distance to the edge
    const double x = near_one ? 1.0 - y : y;
    // log(x/(1-x)) written in terms of y so it survives y below the
    // resolution of double near the edge.
    const double t = near_one ? (std::log1p(-y) - std::log(y)) / beta
                              : (std::log(y) - std::log1p(-y)) / beta;
    return line(x) - t;
  };
  const double u_lo = std::log(1e-300);
  const double u_hi = std::log(kEdgeClip);
  const double f_lo = f(u_lo);
  const double f_hi = f(u_hi);
  if ((f_lo < 0.0) == (f_hi < 0.0)) return near_one ? 1.0 : 0.0;
  const double u = bisect(f, u_lo, u_hi, 1e-13);
  const double y = std::exp(u);
  return near_one ? 1.0 - y : y;
}

// All roots of line(x) = T_beta(x) by uniform sign scan; fallback when the
// assumptions behind the theorem-guided brackets do not hold.
template <class Line>
std::vector<double> scan_roots(double beta, Line&& line, int points = 10000) {
  auto f = [&](double x) { return line(x) - t_beta(beta, x); };
  std::vector<double> roots;
  double x_prev = kEdgeClip;
  double f_prev = f(x_prev);
  for (int i = 1; i <= points; ++i) {
    const double x = kEdgeClip + (1.0 - 2.0 * kEdgeClip) * i / points;
    const double fx = f(x);
    if (fx == 0.0) {
      roots.push_back(x);
    } else if ((fx < 0.0) != (f_prev < 0.0)) {
      roots.push_back(bisect(f, x_prev, x, 1e-13));
    }
    x_prev = x;
    f_prev = fx;
  }
  return roots;
}

inline std::vector<double> merge_close(std::vector<double> xs, double tol) {
  std::sort(xs.begin(), xs.end());
  std::vector<double> out;
  for (double x : xs) {
    if (!out.empty() && x - out.back() < tol)
      out.back() = 0.5 * (out.back() + x);
    else
      out.push_back(x);
  }
  return out;
}

// Scan plus edge completion: T_beta diverges at both endpoints, so a
// same-sign value of line - T_beta at a clip margin certifies one more root
// between that margin and the endpoint.
template <class Line>
std::vector<double> scan_roots_complete(double beta, Line&& line) {
  std::vector<double> roots = scan_roots(beta, line);
  if (line(kEdgeClip) - t_beta(beta, kEdgeClip) < 0.0)
    roots.push_back(solve_near_edge(beta, line, false));
  if (line(1.0 - kEdgeClip) - t_beta(beta, 1.0 - kEdgeClip) > 0.0)
    roots.push_back(solve_near_edge(beta, line, true));
  return merge_close(std::move(roots), kMergeTol);
}

}  // namespace detail

// The collapsed-resource Jacobian is triangular, so this pair of diagonal
// entries is the exact spectrum at a TOC point (x_t, 0).
inline std::array<double, 2> toc_eigenvalues_closed_form(const ModelConfig& cfg,
                                                         double x_t) {
  const LinearCoeffs k = derive_coeffs(cfg.deltas, cfg.env);
  return {cfg.beta * k.b * x_t * (1.0 - x_t) - 1.0,
          cfg.env.epsilon * ((1.0 + cfg.env.theta) * x_t - 1.0)};
}

// Stability test for (x_t, 0) without forming the Jacobian.
inline bool toc_stable_closed_form(const ModelConfig& cfg, double x_t) {
  const LinearCoeffs k = derive_coeffs(cfg.deltas, cfg.env);
  const double x_int = 1.0 / (1.0 + cfg.env.theta);
  return x_t < x_int && cfg.beta * k.b * x_t * (1.0 - x_t) < 1.0;
}

namespace detail {

constexpr double kHyperbolicTol = 1e-9;

inline Stability label_eigenvalues(const std::array<std::complex<double>, 2>& ev,
                                   double tr, double det) {
  if (std::abs(tr) < kHyperbolicTol && det > 0.0)
    return Stability::center_candidate;
  if (std::abs(ev[0].real()) < kHyperbolicTol ||
      std::abs(ev[1].real()) < kHyperbolicTol)
    return Stability::nonhyperbolic;
  if (ev[0].imag() != 0.0)
    return ev[0].real() < 0.0 ? Stability::stable_focus
                              : Stability::unstable_focus;
  if (ev[0].real() < 0.0 && ev[1].real() < 0.0) return Stability::stable_node;
  if (ev[0].real() > 0.0 && ev[1].real() > 0.0) return Stability::unstable_node;
  return Stability::saddle;
}

}  // namespace detail

inline FixedPoint classify_stability(const ModelConfig& cfg, FixedPoint fp) {
  if (is_toc(fp.family)) {
    const auto ev = toc_eigenvalues_closed_form(cfg, fp.location.x);
    const double hi = std::max(ev[0], ev[1]);
    const double lo = std::min(ev[0], ev[1]);
    fp.eigenvalues = {std::complex<double>(hi, 0.0),
                      std::complex<double>(lo, 0.0)};
    fp.stability =
        detail::label_eigenvalues(fp.eigenvalues, hi + lo, hi * lo);
    return fp;
  }
  const Mat2 j = jacobian(cfg, fp.location);
  fp.eigenvalues = j.eigenvalues();
  fp.stability = detail::label_eigenvalues(fp.eigenvalues, j.trace(), j.det());
  return fp;
}

inline std::optional<FixedPoint> interior_fixed_point(const ModelConfig& cfg) {
  if (cfg.rule != LearningRule::logit)
    throw std::invalid_argument("interior_fixed_point: logit rule only");
  if (cfg.beta <= 0.0) return std::nullopt;
  const PayoffDeltas& pd = cfg.deltas;
  const double th = cfg.env.theta;
  const double D = pd.rt0 + pd.tr1 + th * (pd.sp0 + pd.ps1);
  const double n_int = (pd.rt0 + th * pd.sp0 -
                        (1.0 + th) * std::log(1.0 / th) / cfg.beta) /
                       D;
  // Strictly interior levels only; at beta == beta_int the point sits on the
  // collapsed boundary and belongs to the TOC family instead.
  if (!(n_int > 0.0 && n_int < 1.0)) return std::nullopt;
  FixedPoint fp;
  fp.location = {1.0 / (1.0 + th), n_int};
  fp.family = FpFamily::interior;
  return classify_stability(cfg, fp);
}

namespace detail {

inline void check_residual(const ModelConfig& cfg, State s, const char* what) {
  const double r = residual_max_norm(cfg, s);
  if (!(r < kResidualTol)) {
    std::ostringstream msg;
    msg << what << ": residual " << r << " at (" << s.x << ", " << s.n
        << ") exceeds " << kResidualTol;
    throw NumericalError(msg.str());
  }
}

}  // namespace detail

// Roots of b*x + d = T_beta(x), each paired with n = 0. Under the standing
// assumptions the brackets are certain: one root in (1/2, 1) always, and a
// pair in (0, x_b] / [x_b, 1/2) exactly when the tangency gap is positive.
// When the assumptions fail, every root is recovered by a uniform sign scan.
inline std::vector<FixedPoint> toc_fixed_points(const ModelConfig& cfg) {
  if (cfg.rule != LearningRule::logit)
    throw std::invalid_argument("toc_fixed_points: logit rule only");
  if (!(cfg.beta > 0.0))
    throw std::invalid_argument("toc_fixed_points: requires beta > 0");
  const LinearCoeffs k = derive_coeffs(cfg.deltas, cfg.env);
  auto line = [&](double x) { return k.b * x + k.d; };
  auto f = [&](double x) { return line(x) - t_beta(cfg.beta, x); };
  const double clip = detail::kEdgeClip;

  std::vector<double> roots;
  bool merged_pair = false;
  if (check_assumptions(cfg).all_hold()) {
    // Upper root: f(1/2) = b/2 + d > 0 and f -> -inf at the right pole. If
    // the root has drifted past the clip margin, chase it in log space.
    if (f(1.0 - clip) < 0.0)
      roots.push_back(bisect(f, 0.5, 1.0 - clip, 1e-13));
    else
      roots.push_back(detail::solve_near_edge(cfg.beta, line, true));

    if (cfg.beta * k.b > 4.0) {
      const double xb = toc_tangency_x(cfg.beta, k.b);
      if (f(xb) >= 0.0) {
        // Line meets T_beta at most tangentially below 1/2.
        if (f(xb) == 0.0) {
          roots.push_back(xb);
          merged_pair = true;
        }
      } else {
        double lower;
        if (f(clip) > 0.0)
          lower = bisect(f, clip, xb, 1e-13);
        else
          lower = detail::solve_near_edge(cfg.beta, line, false);
        const double upper = bisect(f, xb, 0.5, 1e-13);
        if (upper - lower < detail::kMergeTol) {
          roots.push_back(0.5 * (lower + upper));
          merged_pair = true;
        } else {
          roots.push_back(lower);
          roots.push_back(upper);
        }
      }
    }
  } else {
    roots = detail::scan_roots_complete(cfg.beta, line);
  }

  std::sort(roots.begin(), roots.end());
  std::vector<FixedPoint> out;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    FixedPoint fp;
    fp.location = {roots[i], 0.0};
    if (roots.size() == 1)
      fp.family = FpFamily::toc3;
    else if (i + 1 == roots.size())
      fp.family = FpFamily::toc3;
    else
      fp.family = i == 0 ? FpFamily::toc1 : FpFamily::toc2;
    detail::check_residual(cfg, fp.location, "toc_fixed_points");
    fp = classify_stability(cfg, fp);
    if (merged_pair && fp.family == FpFamily::toc1)
      fp.stability = Stability::nonhyperbolic;
    out.push_back(fp);
  }
  return out;
}

// Unique root of (a+b)*x + c + d = T_beta(x) paired with n = 1. Under the
// dominance assumption g(.,1) < 0 pins it below 1/2.
inline FixedPoint prosperity_fixed_point(const ModelConfig& cfg) {
  if (cfg.rule != LearningRule::logit)
    throw std::invalid_argument("prosperity_fixed_point: logit rule only");
  if (!(cfg.beta > 0.0))
    throw std::invalid_argument("prosperity_fixed_point: requires beta > 0");
  const LinearCoeffs k = derive_coeffs(cfg.deltas, cfg.env);
  auto line = [&](double x) { return (k.a + k.b) * x + k.c + k.d; };
  auto f = [&](double x) { return line(x) - t_beta(cfg.beta, x); };
  const double clip = detail::kEdgeClip;

  double root;
  if (check_assumptions(cfg).all_hold()) {
    if (f(clip) > 0.0)
      root = bisect(f, clip, 0.5, 1e-13);
    else
      root = detail::solve_near_edge(cfg.beta, line, false);
  } else {
    auto roots = detail::scan_roots_complete(cfg.beta, line);
    if (roots.empty())
      throw NumericalError("prosperity_fixed_point: no root found by scan");
    root = roots.front();
  }
  FixedPoint fp;
  fp.location = {root, 1.0};
  fp.family = FpFamily::prosperity;
  detail::check_residual(cfg, fp.location, "prosperity_fixed_point");
  return classify_stability(cfg, fp);
}

inline std::vector<FixedPoint> all_fixed_points(const ModelConfig& cfg) {
  validate(cfg);
  if (cfg.rule != LearningRule::logit)
    throw std::invalid_argument("all_fixed_points: logit rule only");
  std::vector<FixedPoint> out;
  if (cfg.beta == 0.0) {
    if (cfg.env.theta == 1.0) {
      // Every (1/2, n) is an equilibrium; report the family once.
      FixedPoint fp;
      fp.location = {0.5, 0.5};
      fp.family = FpFamily::degenerate_line;
      out.push_back(classify_stability(cfg, fp));
      return out;
    }
    FixedPoint lo, hi;
    lo.location = {0.5, 0.0};
    lo.family = FpFamily::beta0_toc;
    hi.location = {0.5, 1.0};
    hi.family = FpFamily::beta0_prosperity;
    out.push_back(classify_stability(cfg, lo));
    out.push_back(classify_stability(cfg, hi));
    return out;
  }
  if (auto fp = interior_fixed_point(cfg)) out.push_back(*fp);
  for (auto& fp : toc_fixed_points(cfg)) out.push_back(fp);
  out.push_back(prosperity_fixed_point(cfg));
  return out;
}

inline Thresholds thresholds(const ModelConfig& cfg) {
  const LinearCoeffs k = derive_coeffs(cfg.deltas, cfg.env);
  Thresholds t;
  t.beta_int = beta_int(k, cfg.env);
  t.beta_hat = beta_hat(k);
  t.beta_h = beta_hopf(k, cfg.env);
  return t;
}

}  // namespace ecodyn
