#pragma once

// Bifurcation sweep over the rationality parameter: per grid point, every
// fixed point with its stability, a cycle search where the interior point is
// an unstable focus (with a margin on both sides), and a regime label.
// Records are computed independently across parallel workers and merged in
// grid order.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecodyn/dynamics.hpp"
#include "ecodyn/fixed_points.hpp"
#include "ecodyn/model.hpp"
#include "ecodyn/parallel.hpp"

namespace ecodyn {

enum class Regime {
  toc_only,
  interior_stable,
  cycle,
  bistable_cycle_toc,
  toc_high_beta,
};

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::toc_only: return "toc_only";
    case Regime::interior_stable: return "interior_stable";
    case Regime::cycle: return "cycle";
    case Regime::bistable_cycle_toc: return "bistable_cycle_toc";
    case Regime::toc_high_beta: return "toc_high_beta";
  }
  return "?";
}

struct SweepRecord {
  double beta = 0.0;
  std::vector<FixedPoint> fixed_points;
  std::optional<CycleInfo> cycle;
  std::optional<Regime> regime;  // unset when ambiguous
  bool ambiguous = false;
  std::string error;  // non-empty when this grid point failed
};

struct SweepResult {
  ModelConfig base;
  std::vector<SweepRecord> records;
  Thresholds thresholds;
  std::optional<double> beta_u;
};

struct SweepOptions {
  DetectOptions detect{.transient = 300.0, .max_time = 2500.0};
  double cycle_margin = 0.2;  // widen the unstable-focus trigger window
  State cycle_ic{0.6, 0.6};
  bool estimate_collapse = true;
  double collapse_width = 0.02;
};

// Decision table over the record's contents. Conflicting contents (two
// stable fixed points, a cycle around a stable interior point) are surfaced
// through the ambiguous flag, never guessed away.
inline SweepRecord regime_classify(SweepRecord rec, double beta_int_value) {
  rec.regime.reset();
  rec.ambiguous = false;
  if (!rec.error.empty()) {
    rec.ambiguous = true;
    return rec;
  }
  int n_stable = 0;
  bool stable_toc = false;
  bool stable_interior = false;
  for (const auto& fp : rec.fixed_points) {
    if (!is_stable(fp.stability)) continue;
    ++n_stable;
    stable_toc |= is_toc(fp.family);
    stable_interior |= fp.family == FpFamily::interior;
  }
  const bool has_cycle = rec.cycle && rec.cycle->converged;
  if (n_stable > 1) {
    rec.ambiguous = true;
  } else if (has_cycle && stable_toc) {
    rec.regime = Regime::bistable_cycle_toc;
  } else if (has_cycle && n_stable == 0) {
    rec.regime = Regime::cycle;
  } else if (has_cycle) {
    rec.ambiguous = true;  // cycle coexisting with a stable interior point
  } else if (stable_interior) {
    rec.regime = Regime::interior_stable;
  } else if (stable_toc) {
    rec.regime = rec.beta <= beta_int_value ? Regime::toc_only
                                            : Regime::toc_high_beta;
  } else {
    rec.ambiguous = true;
  }
  return rec;
}

namespace detail {

inline bool interior_unstable_focus(ModelConfig cfg, double beta) {
  if (beta <= 0.0) return false;
  cfg.beta = beta;
  const auto fp = interior_fixed_point(cfg);
  return fp && fp->stability == Stability::unstable_focus;
}

}  // namespace detail

// Uniform grid with 4x-density windows of half-width 0.5 around each
// computable threshold; the transitions are where the resolution matters.
inline std::vector<double> default_beta_grid(const ModelConfig& base, double lo,
                                             double hi, int points = 200) {
  if (!(lo < hi) || points < 2)
    throw std::invalid_argument("default_beta_grid: bad range");
  std::vector<double> grid;
  const double step = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) grid.push_back(lo + i * step);
  std::vector<double> centers;
  try {
    const Thresholds t = thresholds(base);
    centers.push_back(t.beta_int);
    centers.push_back(t.beta_h);
    if (t.beta_hat) centers.push_back(*t.beta_hat);
  } catch (const std::exception&) {
    // Thresholds undefined for these parameters; keep the plain grid.
  }
  for (double c : centers) {
    const double w_lo = std::max(lo, c - 0.5);
    const double w_hi = std::min(hi, c + 0.5);
    for (double b = w_lo; b <= w_hi; b += step / 4.0) grid.push_back(b);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [&](double a, double b) { return b - a < step * 1e-6; }),
             grid.end());
  return grid;
}

inline SweepResult sweep(const ModelConfig& base,
                         const std::vector<double>& beta_grid,
                         const SweepOptions& opt = {}) {
  for (std::size_t i = 0; i + 1 < beta_grid.size(); ++i)
    if (!(beta_grid[i] < beta_grid[i + 1]))
      throw std::invalid_argument("sweep: grid must be strictly increasing");
  if (!beta_grid.empty() && beta_grid.front() < 0.0)
    throw std::invalid_argument("sweep: beta must be non-negative");

  SweepResult result;
  result.base = base;
  result.thresholds = thresholds(base);
  result.records.resize(beta_grid.size());

  parallel_for(beta_grid.size(), [&](std::size_t i) {
    SweepRecord& rec = result.records[i];
    rec.beta = beta_grid[i];
    try {
      ModelConfig cfg = base;
      cfg.beta = rec.beta;
      rec.fixed_points = all_fixed_points(cfg);
      const bool search =
          detail::interior_unstable_focus(base, rec.beta - opt.cycle_margin) ||
          detail::interior_unstable_focus(base, rec.beta) ||
          detail::interior_unstable_focus(base, rec.beta + opt.cycle_margin);
      if (search) {
        const AttractorReport r =
            detect_attractor(cfg, opt.cycle_ic, opt.detect);
        if (r.kind == AttractorKind::limit_cycle) rec.cycle = r.cycle;
      }
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    rec = regime_classify(std::move(rec), result.thresholds.beta_int);
  });

  if (opt.estimate_collapse) {
    // Bracket the collapse with the last cycle-bearing record and the first
    // later record whose search came up empty.
    std::optional<std::size_t> last_cycle;
    for (std::size_t i = 0; i < result.records.size(); ++i)
      if (result.records[i].cycle) last_cycle = i;
    if (last_cycle && *last_cycle + 1 < result.records.size()) {
      const SweepRecord& next = result.records[*last_cycle + 1];
      if (next.error.empty() && !next.cycle) {
        try {
          BetaUOptions bu;
          bu.reference_ic = opt.cycle_ic;
          bu.bracket_width = opt.collapse_width;
          bu.detect = opt.detect;
          result.beta_u = estimate_beta_u(
              base, result.records[*last_cycle].beta, next.beta, bu);
        } catch (const std::exception&) {
          result.beta_u.reset();
        }
      }
    }
  }
  return result;
}

}  // namespace ecodyn
