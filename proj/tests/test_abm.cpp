#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ecodyn/abm.hpp"
#include "helpers.hpp"

using namespace ecodyn;
using testutil::fig3_config;
using Catch::Matchers::WithinAbs;

namespace {

AbmConfig abm_config(double beta, std::size_t agents, std::uint64_t seed,
                     double t_end = 50.0) {
  AbmConfig cfg;
  cfg.model = fig3_config(beta);
  cfg.agents = agents;
  cfg.seed = seed;
  cfg.t_end = t_end;
  cfg.s0 = {0.6, 0.6};
  return cfg;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("same seed reproduces the run bit for bit", "[abm]") {
  const AbmConfig cfg = abm_config(2.0, 500, 42, 5.0);
  const AbmTrajectory a = run_abm(cfg);
  const AbmTrajectory b = run_abm(cfg);
  REQUIRE(a.times.size() == b.times.size());
  CHECK(a.revision_count == b.revision_count);
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    CHECK(a.times[i] == b.times[i]);
    CHECK(a.x_fraction[i] == b.x_fraction[i]);
    CHECK(a.n_env[i] == b.n_env[i]);
  }

  AbmConfig other = cfg;
  other.seed = 43;
  const AbmTrajectory c = run_abm(other);
  CHECK(c.times != a.times);
}

TEST_CASE("fractions live on the 1/N lattice and move one agent at a time",
          "[abm]") {
  const AbmConfig cfg = abm_config(2.0, 250, 7, 10.0);
  const AbmTrajectory traj = run_abm(cfg);
  const double N = 250.0;
  for (std::size_t i = 0; i < traj.x_fraction.size(); ++i) {
    const double k = traj.x_fraction[i] * N;
    CHECK(std::abs(k - std::llround(k)) < 1e-9);
    CHECK(traj.n_env[i] >= 0.0);
    CHECK(traj.n_env[i] <= 1.0);
    if (i > 0)
      CHECK(std::abs(traj.x_fraction[i] - traj.x_fraction[i - 1]) <=
            1.0 / N + 1e-12);
  }
  CHECK(traj.clamp_events == 0);
  CHECK(traj.times.back() == cfg.t_end);
}

TEST_CASE("configuration validation", "[abm]") {
  AbmConfig cfg = abm_config(2.0, 100, 0);
  cfg.agents = 1;
  CHECK_THROWS_AS(run_abm(cfg), std::invalid_argument);
  cfg = abm_config(2.0, 100, 0);
  cfg.env_step = 0.0;
  CHECK_THROWS_AS(run_abm(cfg), std::invalid_argument);
  cfg = abm_config(2.0, 100, 0);
  cfg.model.rule = LearningRule::imitative;
  CHECK_THROWS_AS(run_abm(cfg), std::invalid_argument);
  cfg = abm_config(2.0, 100, 0);
  cfg.record_stride = 0;
  CHECK_THROWS_AS(run_abm(cfg), std::invalid_argument);
  cfg = abm_config(2.0, 100, 0);
  cfg.s0 = {1.5, 0.5};
  CHECK_THROWS_AS(run_abm(cfg), std::invalid_argument);
}

TEST_CASE("deviation statistics", "[abm]") {
  SECTION("self-comparison is exactly zero") {
    const AbmTrajectory abm = run_abm(abm_config(2.0, 200, 3, 5.0));
    Trajectory as_ode;
    as_ode.times = abm.times;
    for (std::size_t i = 0; i < abm.times.size(); ++i)
      as_ode.states.push_back({abm.x_fraction[i], abm.n_env[i]});
    const DeviationStats dev = compare_abm_ode(abm, as_ode);
    CHECK(dev.sup_x == 0.0);
    CHECK(dev.sup_n == 0.0);
    CHECK(dev.mean_abs_x == 0.0);
    CHECK(dev.mean_abs_n == 0.0);
  }
  SECTION("disjoint time ranges are rejected") {
    AbmTrajectory abm;
    abm.times = {0.0, 1.0};
    abm.x_fraction = {0.5, 0.5};
    abm.n_env = {0.5, 0.5};
    Trajectory ode;
    ode.times = {2.0, 3.0};
    ode.states = {{0.5, 0.5}, {0.5, 0.5}};
    CHECK_THROWS_AS(compare_abm_ode(abm, ode), std::invalid_argument);
  }
}

TEST_CASE("small populations wander further from the mean dynamics",
          "[abm]") {
  const Trajectory ode = integrate(fig3_config(2.0), {0.6, 0.6}, 50.0);
  std::vector<double> sup_small, sup_large;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    sup_small.push_back(
        compare_abm_ode(run_abm(abm_config(2.0, 100, seed)), ode).sup());
    sup_large.push_back(
        compare_abm_ode(run_abm(abm_config(2.0, 10000, seed)), ode).sup());
  }
  CHECK(median(sup_small) > median(sup_large));
}

TEST_CASE("equilibrium occupancy at zero rationality is Binomial(N, 1/2)",
          "[abm]") {
  // Samples one revision chain far past burn-in, spaced 2N revisions apart
  // so successive samples are effectively independent, then runs a
  // chi-square goodness-of-fit at significance 0.01.
  const std::size_t N = 25;
  const std::size_t samples_wanted = 100000;
  AbmConfig cfg;
  cfg.model = fig3_config(0.0);
  cfg.agents = N;
  cfg.seed = 12345;
  cfg.record_stride = 2 * N;
  cfg.t_end = (samples_wanted * 2.0 * N) / N * 1.03;
  cfg.s0 = {0.5, 0.5};
  const AbmTrajectory traj = run_abm(cfg);

  const std::size_t burn = 50;
  REQUIRE(traj.x_fraction.size() > burn + samples_wanted);
  std::vector<long> counts(N + 1, 0);
  for (std::size_t i = burn; i < burn + samples_wanted; ++i)
    counts[static_cast<std::size_t>(
        std::llround(traj.x_fraction[i] * static_cast<double>(N)))]++;

  // Long-run occupancy is centred on one half.
  double mean = 0.0;
  for (std::size_t k = 0; k <= N; ++k)
    mean += static_cast<double>(counts[k]) * static_cast<double>(k);
  mean /= static_cast<double>(samples_wanted) * static_cast<double>(N);
  CHECK_THAT(mean, WithinAbs(0.5, 0.01));

  std::vector<double> prob(N + 1);
  for (std::size_t k = 0; k <= N; ++k)
    prob[k] = std::exp(std::lgamma(N + 1.0) - std::lgamma(k + 1.0) -
                       std::lgamma(N - k + 1.0) -
                       static_cast<double>(N) * std::log(2.0));

  // Merge consecutive bins until each expected count reaches five.
  double chi2 = 0.0;
  int bins = 0;
  double acc_obs = 0.0, acc_exp = 0.0;
  for (std::size_t k = 0; k <= N; ++k) {
    acc_obs += static_cast<double>(counts[k]);
    acc_exp += static_cast<double>(samples_wanted) * prob[k];
    if (acc_exp >= 5.0) {
      chi2 += (acc_obs - acc_exp) * (acc_obs - acc_exp) / acc_exp;
      ++bins;
      acc_obs = acc_exp = 0.0;
    }
  }
  if (acc_exp > 0.0) chi2 += acc_obs * acc_obs / std::max(acc_exp, 1e-9);
  const int df = bins - 1;
  REQUIRE(df > 5);

  // 99th-percentile chi-square quantile via the Wilson-Hilferty transform.
  const double z99 = 2.3263478740408408;
  const double crit =
      df * std::pow(1.0 - 2.0 / (9.0 * df) + z99 * std::sqrt(2.0 / (9.0 * df)),
                    3.0);
  CHECK(chi2 < crit);
}
