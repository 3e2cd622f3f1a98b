#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ecodyn/dynamics.hpp"
#include "ecodyn/fixed_points.hpp"
#include "ecodyn/integrate.hpp"
#include "helpers.hpp"

using namespace ecodyn;
using testutil::fig3_config;
using Catch::Matchers::WithinAbs;

TEST_CASE("trajectory bookkeeping", "[dynamics]") {
  const Trajectory traj = integrate(fig3_config(2.0), {0.6, 0.6}, 10.0);
  REQUIRE(traj.times.size() == traj.states.size());
  CHECK(traj.steps_accepted == traj.times.size() - 1);
  CHECK(traj.steps_rejected == 0);
  CHECK(traj.times.front() == 0.0);
  CHECK_THAT(traj.times.back(), WithinAbs(10.0, 1e-12));
  for (std::size_t i = 1; i < traj.times.size(); ++i)
    CHECK(traj.times[i] > traj.times[i - 1]);
  for (const State& s : traj.states) {
    CHECK(s.x >= 0.0);
    CHECK(s.x <= 1.0);
    CHECK(s.n >= 0.0);
    CHECK(s.n <= 1.0);
  }
}

TEST_CASE("integrate rejects bad input", "[dynamics]") {
  CHECK_THROWS_AS(integrate(fig3_config(1.0), {0.5, 0.5}, -1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate(fig3_config(1.0), {1.5, 0.5}, 1.0),
                  std::invalid_argument);
  StepControl bad;
  bad.h = 0.0;
  CHECK_THROWS_AS(integrate(fig3_config(1.0), {0.5, 0.5}, 1.0, bad),
                  std::invalid_argument);
}

TEST_CASE("adaptive stepper reports underflow for unreachable tolerances",
          "[dynamics]") {
  StepControl ctrl;
  ctrl.method = StepMethod::adaptive45;
  // At h = 0.01 the embedded error estimate is far above the tolerance, so
  // the very first rejection pushes h below this floor.
  ctrl.abs_tol = 1e-300;
  ctrl.rel_tol = 0.0;
  ctrl.h_min = 5e-3;
  CHECK_THROWS_AS(integrate(fig3_config(6.0), {0.6, 0.6}, 1.0, ctrl),
                  IntegrationError);
}

TEST_CASE("stable equilibria hold under integration", "[dynamics]") {
  // Interior point below the Hopf threshold.
  {
    const ModelConfig cfg = fig3_config(2.0);
    const auto fp = interior_fixed_point(cfg);
    REQUIRE(fp.has_value());
    const Trajectory traj = integrate(cfg, fp->location, 100.0);
    for (const State& s : traj.states) {
      CHECK(std::abs(s.x - fp->location.x) < 1e-8);
      CHECK(std::abs(s.n - fp->location.n) < 1e-8);
    }
  }
  // Stable collapsed point above the tangency rationality.
  {
    const ModelConfig cfg = fig3_config(8.0);
    const auto pts = toc_fixed_points(cfg);
    REQUIRE(is_stable(pts[0].stability));
    const Trajectory traj = integrate(cfg, pts[0].location, 100.0);
    for (const State& s : traj.states)
      CHECK(std::abs(s.x - pts[0].location.x) < 1e-8);
  }
}

TEST_CASE("fourth-order convergence on a smooth arc", "[dynamics]") {
  const ModelConfig cfg = fig3_config(6.0);
  const State ic{0.6, 0.6};
  const double t_end = 5.0;
  StepControl fine;
  fine.h = 1e-4;
  const State ref = integrate(cfg, ic, t_end, fine).states.back();
  auto endpoint_error = [&](double h) {
    StepControl c;
    c.h = h;
    const State e = integrate(cfg, ic, t_end, c).states.back();
    return std::max(std::abs(e.x - ref.x), std::abs(e.n - ref.n));
  };
  const double ratio = endpoint_error(0.04) / endpoint_error(0.02);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("adaptive and fixed-step integrators agree", "[dynamics]") {
  const ModelConfig cfg = fig3_config(6.0);
  StepControl ad;
  ad.method = StepMethod::adaptive45;
  const Trajectory at = integrate(cfg, {0.6, 0.6}, 50.0, ad);
  const State a = at.states.back();
  const State f = integrate(cfg, {0.6, 0.6}, 50.0).states.back();
  CHECK(std::abs(a.x - f.x) < 1e-5);
  CHECK(std::abs(a.n - f.n) < 1e-5);
  CHECK(at.steps_accepted > 10);
}

TEST_CASE("forward invariance over random runs", "[dynamics]") {
  std::mt19937 rng(404);
  for (int run = 0; run < 300; ++run) {
    const ModelConfig cfg = testutil::random_any_config(rng);
    const State ic{testutil::uniform(rng, 0.0, 1.0),
                   testutil::uniform(rng, 0.0, 1.0)};
    const double t_end = testutil::uniform(rng, 1.0, 100.0);
    bool inside = true;
    REQUIRE_NOTHROW(integrate_observe(
        cfg, ic, t_end, StepControl{}, [&](double, State s) {
          inside = inside && s.x >= 0.0 && s.x <= 1.0 && s.n >= 0.0 && s.n <= 1.0;
          return true;
        }));
    CHECK(inside);
  }
}

TEST_CASE("zero rationality collapses the resource from anywhere",
          "[dynamics]") {
  std::mt19937 rng(19);
  const ModelConfig cfg = fig3_config(0.0);
  for (int run = 0; run < 20; ++run) {
    const State ic{testutil::uniform(rng, 0.01, 0.99),
                   testutil::uniform(rng, 0.01, 0.99)};
    const State f = integrate(cfg, ic, 500.0).states.back();
    CHECK(std::abs(f.x - 0.5) < 1e-6);
    CHECK(f.n < 1e-6);
  }
}

TEST_CASE("imitative dynamics reach the tragedy corner", "[dynamics]") {
  std::mt19937 rng(20);
  const ModelConfig cfg = fig3_config(3.0, LearningRule::imitative);
  REQUIRE(check_assumptions(cfg).all_hold());
  for (int run = 0; run < 20; ++run) {
    const State ic{testutil::uniform(rng, 0.02, 0.98),
                   testutil::uniform(rng, 0.02, 0.98)};
    const State f = integrate(cfg, ic, 500.0).states.back();
    CHECK(f.x < 1e-3);
    CHECK(f.n < 1e-3);
  }
}

TEST_CASE("limit cycle at beta = 6", "[dynamics]") {
  const ModelConfig cfg = fig3_config(6.0);
  const auto cycle = limit_cycle(cfg, {0.6, 0.6});
  REQUIRE(cycle.has_value());
  CHECK(cycle->converged);
  CHECK(cycle->n_min < cycle->n_max);
  CHECK(cycle->period > 5.0);
  CHECK(cycle->period < 50.0);
  CHECK(static_cast<int>(cycle->section_points.size()) == 5);

  // Encircles the interior fixed point.
  const auto fp = interior_fixed_point(cfg);
  REQUIRE(fp.has_value());
  CHECK(cycle->x_min < fp->location.x);
  CHECK(cycle->x_max > fp->location.x);
  CHECK(cycle->n_min < fp->location.n);
  CHECK(cycle->n_max > fp->location.n);

  // Envelope is insensitive to halving the step.
  CycleOptions half;
  half.step.h = 0.005;
  const auto refined = limit_cycle(cfg, {0.6, 0.6}, half);
  REQUIRE(refined.has_value());
  CHECK(std::abs(refined->n_min - cycle->n_min) < 1e-3);
  CHECK(std::abs(refined->n_max - cycle->n_max) < 1e-3);
}

TEST_CASE("no cycle below the Hopf threshold", "[dynamics]") {
  CHECK_FALSE(limit_cycle(fig3_config(5.0), {0.6, 0.6}).has_value());
  const AttractorReport r = detect_attractor(fig3_config(5.0), {0.6, 0.6});
  REQUIRE(r.kind == AttractorKind::fixed_point);
  CHECK(r.fixed_point->family == FpFamily::interior);
}

TEST_CASE("cycle amplitude grows with rationality", "[dynamics]") {
  double prev = 0.0;
  for (double beta : {5.8, 6.4, 7.0}) {
    const auto cycle = limit_cycle(fig3_config(beta), {0.6, 0.6});
    REQUIRE(cycle.has_value());
    const double amplitude = cycle->n_max - cycle->n_min;
    CHECK(amplitude > prev);
    prev = amplitude;
  }
}

TEST_CASE("attractor detection across the regimes", "[dynamics]") {
  SECTION("stable interior point") {
    const AttractorReport r = detect_attractor(fig3_config(2.0), {0.6, 0.6});
    REQUIRE(r.kind == AttractorKind::fixed_point);
    CHECK(r.fixed_point->family == FpFamily::interior);
    CHECK_FALSE(r.cycle.has_value());
  }
  SECTION("limit cycle") {
    const AttractorReport r = detect_attractor(fig3_config(6.0), {0.6, 0.6});
    REQUIRE(r.kind == AttractorKind::limit_cycle);
    REQUIRE(r.cycle.has_value());
    CHECK_FALSE(r.fixed_point.has_value());
    CHECK(r.cycle->converged);
  }
  SECTION("collapsed resource at high rationality") {
    const AttractorReport r = detect_attractor(fig3_config(8.0), {0.6, 0.6});
    REQUIRE(r.kind == AttractorKind::fixed_point);
    CHECK(r.fixed_point->family == FpFamily::toc1);
    CHECK_THAT(r.fixed_point->location.x, WithinAbs(0.027767913529472241, 1e-9));
  }
  SECTION("bistability: basin depends on the initial condition") {
    const ModelConfig cfg = fig3_config(7.75);
    CHECK(detect_attractor(cfg, {0.6, 0.6}).kind == AttractorKind::limit_cycle);
    const AttractorReport near_toc = detect_attractor(cfg, {0.1, 0.05});
    REQUIRE(near_toc.kind == AttractorKind::fixed_point);
    CHECK(near_toc.fixed_point->family == FpFamily::toc1);
  }
}

TEST_CASE("perturbed stable points are recovered", "[dynamics]") {
  for (double beta : {1.0, 3.0, 5.0}) {
    const ModelConfig cfg = fig3_config(beta);
    const auto fp = interior_fixed_point(cfg);
    REQUIRE(fp.has_value());
    REQUIRE(is_stable(fp->stability));
    const State ic{fp->location.x + 1e-4, fp->location.n + 1e-4};
    const AttractorReport r = detect_attractor(cfg, ic);
    REQUIRE(r.kind == AttractorKind::fixed_point);
    CHECK(r.fixed_point->family == FpFamily::interior);
  }
}

TEST_CASE("basin sampling", "[dynamics]") {
  CHECK_THROWS_AS(basin_sample(fig3_config(2.0), 3, 8), std::invalid_argument);

  const BasinMap map = basin_sample(fig3_config(2.0), 5, 5);
  REQUIRE(map.cells.size() == 25);
  for (const auto& cell : map.cells) {
    CHECK(cell.kind == AttractorKind::fixed_point);
    CHECK(cell.label == "interior");
    CHECK(cell.ic.x > 0.0);
    CHECK(cell.ic.x < 1.0);
  }
}

TEST_CASE("collapse bracket must straddle the transition", "[dynamics]") {
  CHECK_THROWS_AS(estimate_beta_u(fig3_config(), 2.0, 5.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_beta_u(fig3_config(), 5.0, 2.0),
                  std::invalid_argument);
}

TEST_CASE("worker count does not change basin results", "[dynamics]") {
  const ModelConfig cfg = fig3_config(7.75);
  setenv("ECODYN_THREADS", "1", 1);
  const BasinMap serial = basin_sample(cfg, 5, 5);
  setenv("ECODYN_THREADS", "3", 1);
  CHECK(worker_count() == 3);
  const BasinMap threaded = basin_sample(cfg, 5, 5);
  unsetenv("ECODYN_THREADS");
  REQUIRE(serial.cells.size() == threaded.cells.size());
  for (std::size_t i = 0; i < serial.cells.size(); ++i) {
    CHECK(serial.cells[i].label == threaded.cells[i].label);
    CHECK(serial.cells[i].ic.x == threaded.cells[i].ic.x);
  }
  // The mixed-basin case exercises both labels.
  bool toc = false, cyc = false;
  for (const auto& cell : serial.cells) {
    toc |= cell.label == "toc1";
    cyc |= cell.label == "cycle";
  }
  CHECK(toc);
  CHECK(cyc);
}
