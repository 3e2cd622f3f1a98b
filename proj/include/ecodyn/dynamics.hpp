#pragma once

// Attractor detection for the planar flow: fixed point versus limit cycle.
//
// Cycles are measured on the Poincare section {x = x_int, dx/dt > 0}. Every
// cycle of this system encircles the interior fixed point, so the section is
// transversal; crossings are located by linear interpolation between
// accepted steps. A cycle is declared once a run of consecutive section
// returns agree to within section_tol, and its envelope is read off the last
// completed loop. Returns can also "stabilize" while a trajectory spirals
// into a stable focus, so an orbit whose envelope is narrower than
// min_amplitude is never reported as a cycle.

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecodyn/fixed_points.hpp"
#include "ecodyn/integrate.hpp"
#include "ecodyn/model.hpp"
#include "ecodyn/parallel.hpp"

namespace ecodyn {

struct CycleInfo {
  double period = 0.0;
  double n_min = 0.0, n_max = 0.0;
  double x_min = 0.0, x_max = 0.0;
  std::vector<State> section_points;
  bool converged = false;
};

enum class AttractorKind { fixed_point, limit_cycle, undecided };

struct AttractorReport {
  AttractorKind kind = AttractorKind::undecided;
  std::optional<FixedPoint> fixed_point;
  std::optional<CycleInfo> cycle;
  double transient_time = 0.0;
};

struct CycleOptions {
  double transient = 200.0;     // time discarded before returns count
  double max_time = 3000.0;     // total integration budget
  double section_tol = 1e-6;
  int returns_needed = 5;
  double min_amplitude = 1e-4;
  StepControl step{};
};

struct DetectOptions {
  double transient = 200.0;
  double max_time = 2000.0;
  double fp_tol = 1e-6;       // proximity that counts as "at" a fixed point
  double fp_hold_time = 10.0; // how long proximity must persist
  double section_tol = 1e-6;
  int returns_needed = 5;
  double min_amplitude = 1e-4;
  StepControl step{};
};

namespace detail {

// Accumulates upward crossings of x = x_section and per-loop state extrema.
class SectionTracker {
 public:
  SectionTracker(double x_section, double t_min, double tol, int needed)
      : x_section_(x_section), t_min_(t_min), tol_(tol), needed_(needed) {}

  // Feed one accepted step; true once the last `needed` returns agree.
  bool observe(double t, State s) {
    bool converged = false;
    if (have_prev_ && t >= t_min_ && prev_.x < x_section_ && s.x >= x_section_) {
      const double frac = (x_section_ - prev_.x) / (s.x - prev_.x);
      const double tc = prev_t_ + frac * (t - prev_t_);
      const double nc = prev_.n + frac * (s.n - prev_.n);
      cross_times_.push_back(tc);
      cross_n_.push_back(nc);
      loop_extrema_.push_back(cur_loop_);
      cur_loop_ = Extrema{};
      cur_loop_.include({x_section_, nc});
      converged = check_converged();
    }
    if (have_prev_ && t >= t_min_) cur_loop_.include(s);
    prev_ = s;
    prev_t_ = t;
    have_prev_ = true;
    return converged;
  }

  std::size_t crossings() const { return cross_times_.size(); }
  double last_crossing_time() const { return cross_times_.back(); }
  double first_converged_time() const {
    return cross_times_[cross_times_.size() - needed_];
  }

  CycleInfo info() const {
    CycleInfo c;
    const std::size_t k = cross_times_.size();
    c.period = (cross_times_[k - 1] - cross_times_[k - needed_]) /
               static_cast<double>(needed_ - 1);
    // The most recently completed loop spans the last two crossings.
    const Extrema& loop = loop_extrema_.back();
    c.x_min = loop.x_min;
    c.x_max = loop.x_max;
    c.n_min = loop.n_min;
    c.n_max = loop.n_max;
    for (std::size_t i = k - needed_; i < k; ++i)
      c.section_points.push_back({x_section_, cross_n_[i]});
    c.converged = true;
    return c;
  }

  double amplitude() const {
    const Extrema& loop = loop_extrema_.back();
    return std::max(loop.x_max - loop.x_min, loop.n_max - loop.n_min);
  }

 private:
  struct Extrema {
    double x_min = 1.0, x_max = 0.0, n_min = 1.0, n_max = 0.0;
    void include(State s) {
      x_min = std::min(x_min, s.x);
      x_max = std::max(x_max, s.x);
      n_min = std::min(n_min, s.n);
      n_max = std::max(n_max, s.n);
    }
  };

  bool check_converged() const {
    const std::size_t k = cross_n_.size();
    if (k < static_cast<std::size_t>(needed_) + 1) return false;
    // +1: the window must consist of full loops, so extrema are meaningful.
    double lo = cross_n_[k - needed_], hi = lo;
    for (std::size_t i = k - needed_; i < k; ++i) {
      lo = std::min(lo, cross_n_[i]);
      hi = std::max(hi, cross_n_[i]);
    }
    return hi - lo < tol_;
  }

  double x_section_, t_min_, tol_;
  int needed_;
  std::vector<double> cross_times_, cross_n_;
  std::vector<Extrema> loop_extrema_;
  Extrema cur_loop_;
  State prev_{};
  double prev_t_ = 0.0;
  bool have_prev_ = false;
};

}  // namespace detail

inline std::optional<CycleInfo> limit_cycle(const ModelConfig& cfg, State s0,
                                            const CycleOptions& opt = {}) {
  const double x_section = 1.0 / (1.0 + cfg.env.theta);
  detail::SectionTracker tracker(x_section, opt.transient, opt.section_tol,
                                 opt.returns_needed);
  bool converged = false;
  integrate_observe(cfg, s0, opt.max_time, opt.step, [&](double t, State s) {
    if (tracker.observe(t, s)) {
      converged = true;
      return false;
    }
    return true;
  });
  if (!converged || tracker.amplitude() < opt.min_amplitude)
    return std::nullopt;
  return tracker.info();
}

inline AttractorReport detect_attractor(const ModelConfig& cfg, State s0,
                                        const DetectOptions& opt = {}) {
  const std::vector<FixedPoint> fps = all_fixed_points(cfg);
  std::vector<const FixedPoint*> attracting;
  for (const auto& fp : fps)
    if (is_stable(fp.stability)) attracting.push_back(&fp);

  const double x_section = 1.0 / (1.0 + cfg.env.theta);
  detail::SectionTracker tracker(x_section, opt.transient, opt.section_tol,
                                 opt.returns_needed);

  AttractorReport report;
  int hold_idx = -1;
  double hold_start = 0.0;
  bool cycle_checks = true;

  integrate_observe(cfg, s0, opt.max_time, opt.step, [&](double t, State s) {
    int near = -1;
    for (std::size_t i = 0; i < attracting.size(); ++i) {
      const State& p = attracting[i]->location;
      if (std::max(std::abs(s.x - p.x), std::abs(s.n - p.n)) <= opt.fp_tol) {
        near = static_cast<int>(i);
        break;
      }
    }
    if (near != hold_idx) {
      hold_idx = near;
      hold_start = t;
    }
    if (hold_idx >= 0 && t - hold_start >= opt.fp_hold_time) {
      report.kind = AttractorKind::fixed_point;
      report.fixed_point = *attracting[hold_idx];
      report.transient_time = hold_start;
      return false;
    }
    if (cycle_checks && tracker.observe(t, s)) {
      if (tracker.amplitude() >= opt.min_amplitude) {
        report.kind = AttractorKind::limit_cycle;
        report.cycle = tracker.info();
        report.transient_time = tracker.first_converged_time();
        return false;
      }
      // Returns collapsed to a point: a focus being approached, not a
      // cycle. Leave the fixed-point rule to finish the classification.
      cycle_checks = false;
    }
    return true;
  });
  if (report.kind == AttractorKind::undecided)
    report.transient_time = opt.max_time;
  return report;
}

struct BasinMap {
  struct Cell {
    State ic;
    AttractorKind kind = AttractorKind::undecided;
    std::string label;
  };
  std::vector<Cell> cells;
  int nx = 0, ny = 0;
};

inline std::string attractor_label(const AttractorReport& r) {
  switch (r.kind) {
    case AttractorKind::fixed_point: return to_string(r.fixed_point->family);
    case AttractorKind::limit_cycle: return "cycle";
    case AttractorKind::undecided: return "undecided";
  }
  return "?";
}

// Classifies every point of a uniform interior lattice. Runs distribute
// over parallel workers; the cell order is fixed by the grid alone.
inline BasinMap basin_sample(const ModelConfig& cfg, int nx, int ny,
                             const DetectOptions& opt = {}) {
  if (nx < 4 || ny < 4)
    throw std::invalid_argument("basin_sample: resolution must be >= 4x4");
  BasinMap map;
  map.nx = nx;
  map.ny = ny;
  map.cells.resize(static_cast<std::size_t>(nx) * ny);
  parallel_for(map.cells.size(), [&](std::size_t idx) {
    const int i = static_cast<int>(idx) % nx;
    const int j = static_cast<int>(idx) / nx;
    const State ic{(i + 1.0) / (nx + 1.0), (j + 1.0) / (ny + 1.0)};
    const AttractorReport r = detect_attractor(cfg, ic, opt);
    map.cells[idx] = {ic, r.kind, attractor_label(r)};
  });
  return map;
}

struct BetaUOptions {
  State reference_ic{0.6, 0.6};
  double bracket_width = 0.02;
  DetectOptions detect{.transient = 250.0, .max_time = 2500.0};
};

// Locates the rationality level where the limit cycle collapses, by
// bisection on "a cycle is reached from the reference initial condition".
inline double estimate_beta_u(const ModelConfig& base, double beta_lo,
                              double beta_hi, const BetaUOptions& opt = {}) {
  if (!(beta_lo < beta_hi))
    throw std::invalid_argument("estimate_beta_u: empty bracket");
  auto cycle_at = [&](double beta) {
    ModelConfig cfg = base;
    cfg.beta = beta;
    AttractorReport r = detect_attractor(cfg, opt.reference_ic, opt.detect);
    if (r.kind == AttractorKind::undecided) {
      DetectOptions longer = opt.detect;
      longer.max_time *= 2.0;
      r = detect_attractor(cfg, opt.reference_ic, longer);
    }
    if (r.kind == AttractorKind::undecided) {
      std::ostringstream msg;
      msg << "estimate_beta_u: undecided attractor at beta=" << beta;
      throw NumericalError(msg.str());
    }
    return r.kind == AttractorKind::limit_cycle;
  };
  if (!cycle_at(beta_lo) || cycle_at(beta_hi)) {
    std::ostringstream msg;
    msg << "estimate_beta_u: bracket (" << beta_lo << ", " << beta_hi
        << ") must enclose a cycle-to-no-cycle transition";
    throw std::invalid_argument(msg.str());
  }
  while (beta_hi - beta_lo > opt.bracket_width) {
    const double mid = 0.5 * (beta_lo + beta_hi);
    (cycle_at(mid) ? beta_lo : beta_hi) = mid;
  }
  return 0.5 * (beta_lo + beta_hi);
}

}  // namespace ecodyn
