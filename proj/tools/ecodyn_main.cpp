// Command-line front end: every analysis as a subcommand emitting CSV.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecodyn/abm.hpp"
#include "ecodyn/config.hpp"
#include "ecodyn/csv.hpp"
#include "ecodyn/dynamics.hpp"
#include "ecodyn/fixed_points.hpp"
#include "ecodyn/integrate.hpp"
#include "ecodyn/model.hpp"
#include "ecodyn/sweep.hpp"

namespace {

using namespace ecodyn;

struct CommonOpts {
  std::string config_file;
  std::string preset;
  std::optional<double> tr1, ps1, rt0, sp0, theta, epsilon, beta;
  std::string rule;
  std::string output;
  std::uint64_t seed = 0;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_file, "key=value configuration file");
  cmd->add_option("--preset", o.preset, "named parameter preset (fig3)");
  cmd->add_option("--delta-tr1", o.tr1, "payoff delta T1-R1");
  cmd->add_option("--delta-ps1", o.ps1, "payoff delta P1-S1");
  cmd->add_option("--delta-rt0", o.rt0, "payoff delta R0-T0");
  cmd->add_option("--delta-sp0", o.sp0, "payoff delta S0-P0");
  cmd->add_option("--theta", o.theta, "resource replenishment rate");
  cmd->add_option("--epsilon", o.epsilon, "time-scale separation");
  cmd->add_option("--beta", o.beta, "rationality parameter");
  cmd->add_option("--rule", o.rule, "learning rule: logit or imitative");
  cmd->add_option("--output,-o", o.output, "output path (default: stdout)");
  cmd->add_option("--seed", o.seed, "random seed (stochastic commands)");
}

// Precedence: defaults < preset < config file < explicit flags.
ModelConfig resolve_model(const CommonOpts& o) {
  ModelConfig cfg;
  if (!o.preset.empty()) apply_preset(cfg, o.preset);
  if (!o.config_file.empty()) apply_config_file(cfg, o.config_file);
  if (o.tr1) cfg.deltas.tr1 = *o.tr1;
  if (o.ps1) cfg.deltas.ps1 = *o.ps1;
  if (o.rt0) cfg.deltas.rt0 = *o.rt0;
  if (o.sp0) cfg.deltas.sp0 = *o.sp0;
  if (o.theta) cfg.env.theta = *o.theta;
  if (o.epsilon) cfg.env.epsilon = *o.epsilon;
  if (o.beta) cfg.beta = *o.beta;
  if (!o.rule.empty()) cfg.rule = parse_rule(o.rule);
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

void emit(const CsvTable& table, const CommonOpts& o) {
  if (o.output.empty()) {
    table.write(std::cout);
    return;
  }
  std::ofstream out(o.output);
  if (!out) throw ConfigError("cannot open output file '" + o.output + "'");
  table.write(out);
}

std::vector<std::string> fixed_point_row(double beta, const FixedPoint& fp) {
  return {fmt_real(beta),
          to_string(fp.family),
          fmt_real(fp.location.x),
          fmt_real(fp.location.n),
          fmt_real(fp.eigenvalues[0].real()),
          fmt_real(fp.eigenvalues[0].imag()),
          fmt_real(fp.eigenvalues[1].real()),
          fmt_real(fp.eigenvalues[1].imag()),
          to_string(fp.stability)};
}

int cmd_coeffs(const CommonOpts& o) {
  const ModelConfig cfg = resolve_model(o);
  const LinearCoeffs k = derive_coeffs(cfg.deltas, cfg.env);
  const AssumptionReport rep = check_assumptions(cfg);
  CsvTable t;
  t.preamble = config_preamble(cfg);
  t.header = {"a", "b", "c", "d", "D", "n_bar", "x0", "a1", "a2", "a3"};
  t.add_row({fmt_real(k.a), fmt_real(k.b), fmt_real(k.c), fmt_real(k.d),
             fmt_real(k.D), fmt_real(k.n_bar),
             k.x0 ? fmt_real(*k.x0) : "nan",
             rep.a1_holds ? "true" : "false", rep.a2_holds ? "true" : "false",
             rep.a3_holds ? "true" : "false"});
  emit(t, o);
  return 0;
}

int cmd_fixed_points(const CommonOpts& o) {
  const ModelConfig cfg = resolve_model(o);
  CsvTable t;
  t.preamble = config_preamble(cfg);
  t.header = {"beta", "family", "x", "n", "eig1_re", "eig1_im",
              "eig2_re", "eig2_im", "stability"};
  int code = 0;
  auto error_row = [&](const std::exception& e) {
    t.add_row({fmt_real(cfg.beta), "error", "nan", "nan", "nan", "nan", "nan",
               "nan", "nan"});
    t.footer.push_back(std::string("error: ") + e.what());
    code = 3;
  };
  if (cfg.beta == 0.0) {
    for (const auto& fp : all_fixed_points(cfg))
      t.add_row(fixed_point_row(cfg.beta, fp));
  } else {
    // Families fail independently; whatever was found still gets emitted.
    try {
      if (const auto fp = interior_fixed_point(cfg))
        t.add_row(fixed_point_row(cfg.beta, *fp));
    } catch (const std::runtime_error& e) {
      error_row(e);
    }
    try {
      for (const auto& fp : toc_fixed_points(cfg))
        t.add_row(fixed_point_row(cfg.beta, fp));
    } catch (const std::runtime_error& e) {
      error_row(e);
    }
    try {
      t.add_row(fixed_point_row(cfg.beta, prosperity_fixed_point(cfg)));
    } catch (const std::runtime_error& e) {
      error_row(e);
    }
  }
  emit(t, o);
  return code;
}

int cmd_thresholds(const CommonOpts& o, bool estimate_bu,
                   std::optional<double> bu_lo, std::optional<double> bu_hi) {
  const ModelConfig cfg = resolve_model(o);
  CsvTable t;
  t.preamble = config_preamble(cfg);
  t.header = {"beta_int", "beta_hat", "beta_h", "beta_u"};
  int code = 0;
  try {
    const Thresholds th = thresholds(cfg);
    std::optional<double> beta_u;
    if (estimate_bu) {
      const double lo = bu_lo ? *bu_lo : th.beta_h + 0.15;
      const double hi = bu_hi ? *bu_hi : th.beta_h + 3.0;
      beta_u = estimate_beta_u(cfg, lo, hi);
    }
    t.add_row({fmt_real(th.beta_int),
               th.beta_hat ? fmt_real(*th.beta_hat) : "nan",
               fmt_real(th.beta_h), beta_u ? fmt_real(*beta_u) : "nan"});
  } catch (const std::domain_error& e) {
    t.add_row({"nan", "nan", "nan", "nan"});
    t.footer.push_back(std::string("error: ") + e.what());
    code = 3;
  } catch (const std::runtime_error& e) {
    t.add_row({"nan", "nan", "nan", "nan"});
    t.footer.push_back(std::string("error: ") + e.what());
    code = 3;
  }
  emit(t, o);
  return code;
}

int cmd_simulate(const CommonOpts& o, double x0, double n0, double t_end,
                 const std::string& method, std::size_t stride) {
  const ModelConfig cfg = resolve_model(o);
  StepControl ctrl;
  if (method == "adaptive45") ctrl.method = StepMethod::adaptive45;
  else if (method != "rk4") throw ConfigError("method must be rk4 or adaptive45");
  const Trajectory traj = integrate(cfg, {x0, n0}, t_end, ctrl);
  CsvTable t;
  t.preamble = config_preamble(cfg);
  t.preamble.push_back("x0=" + fmt_real(x0));
  t.preamble.push_back("n0=" + fmt_real(n0));
  t.preamble.push_back("t_end=" + fmt_real(t_end));
  t.preamble.push_back("method=" + method);
  t.header = {"t", "x", "n", "source"};
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (i % stride != 0 && i + 1 != traj.times.size()) continue;
    t.add_row({fmt_real(traj.times[i]), fmt_real(traj.states[i].x),
               fmt_real(traj.states[i].n), "ode"});
  }
  emit(t, o);
  return 0;
}

int cmd_sweep(const CommonOpts& o, double beta_min, double beta_max,
              int points) {
  const ModelConfig cfg = resolve_model(o);
  const std::vector<double> grid =
      default_beta_grid(cfg, beta_min, beta_max, points);
  const SweepResult res = sweep(cfg, grid);
  CsvTable t;
  t.preamble = config_preamble(cfg);
  t.preamble.push_back("beta_int=" + fmt_real(res.thresholds.beta_int));
  t.preamble.push_back(
      "beta_hat=" +
      (res.thresholds.beta_hat ? fmt_real(*res.thresholds.beta_hat) : "nan"));
  t.preamble.push_back("beta_h=" + fmt_real(res.thresholds.beta_h));
  t.preamble.push_back("beta_u=" +
                       (res.beta_u ? fmt_real(*res.beta_u) : "nan"));
  t.header = {"beta", "kind", "x", "n", "n_min", "n_max", "period",
              "stability", "regime"};
  for (const auto& rec : res.records) {
    const std::string regime =
        rec.ambiguous ? "ambiguous"
                      : (rec.regime ? to_string(*rec.regime) : "ambiguous");
    if (!rec.error.empty()) {
      t.add_row({fmt_real(rec.beta), "error", "nan", "nan", "nan", "nan",
                 "nan", "nan", regime});
      t.footer.push_back("record beta=" + fmt_real(rec.beta) +
                         " error: " + rec.error);
      continue;
    }
    for (const auto& fp : rec.fixed_points)
      t.add_row({fmt_real(rec.beta), to_string(fp.family),
                 fmt_real(fp.location.x), fmt_real(fp.location.n), "nan",
                 "nan", "nan", to_string(fp.stability), regime});
    if (rec.cycle)
      t.add_row({fmt_real(rec.beta), "cycle", "nan", "nan",
                 fmt_real(rec.cycle->n_min), fmt_real(rec.cycle->n_max),
                 fmt_real(rec.cycle->period), "nan", regime});
  }
  emit(t, o);
  return 0;
}

int cmd_portrait(const CommonOpts& o, int grid, double t_end,
                 std::size_t stride) {
  const ModelConfig cfg = resolve_model(o);
  if (grid < 1) throw ConfigError("portrait: grid must be >= 1");
  CsvTable t;
  t.preamble = config_preamble(cfg);
  t.preamble.push_back("grid=" + std::to_string(grid));
  t.preamble.push_back("t_end=" + fmt_real(t_end));
  t.header = {"ic_id", "t", "x", "n"};
  int ic_id = 0;
  for (int j = 0; j < grid; ++j) {
    for (int i = 0; i < grid; ++i, ++ic_id) {
      const State ic{(i + 1.0) / (grid + 1.0), (j + 1.0) / (grid + 1.0)};
      const Trajectory traj = integrate(cfg, ic, t_end);
      for (std::size_t s = 0; s < traj.times.size(); ++s) {
        if (s % stride != 0 && s + 1 != traj.times.size()) continue;
        t.add_row({std::to_string(ic_id), fmt_real(traj.times[s]),
                   fmt_real(traj.states[s].x), fmt_real(traj.states[s].n)});
      }
    }
  }
  emit(t, o);
  return 0;
}

int cmd_abm(const CommonOpts& o, std::size_t agents, double x0, double n0,
            double t_end, double env_step, std::size_t stride) {
  AbmConfig acfg;
  acfg.model = resolve_model(o);
  acfg.agents = agents;
  acfg.seed = o.seed;
  acfg.t_end = t_end;
  acfg.env_step = env_step;
  acfg.s0 = {x0, n0};
  acfg.record_stride = stride;
  const AbmTrajectory abm = run_abm(acfg);
  const Trajectory ode = integrate(acfg.model, acfg.s0, t_end);
  const DeviationStats dev = compare_abm_ode(abm, ode);

  CsvTable t;
  t.preamble = config_preamble(acfg.model);
  t.preamble.push_back("agents=" + std::to_string(agents));
  t.preamble.push_back("seed=" + std::to_string(o.seed));
  t.preamble.push_back("x0=" + fmt_real(x0));
  t.preamble.push_back("n0=" + fmt_real(n0));
  t.preamble.push_back("t_end=" + fmt_real(t_end));
  t.preamble.push_back("env_step=" + fmt_real(env_step));
  t.header = {"t", "x", "n", "source"};
  for (std::size_t i = 0; i < abm.times.size(); ++i)
    t.add_row({fmt_real(abm.times[i]), fmt_real(abm.x_fraction[i]),
               fmt_real(abm.n_env[i]), "abm"});
  for (std::size_t i = 0; i < ode.times.size(); ++i)
    t.add_row({fmt_real(ode.times[i]), fmt_real(ode.states[i].x),
               fmt_real(ode.states[i].n), "ode"});
  t.footer.push_back("revisions=" + std::to_string(abm.revision_count));
  t.footer.push_back("clamp_events=" + std::to_string(abm.clamp_events));
  t.footer.push_back("sup_x=" + fmt_real(dev.sup_x));
  t.footer.push_back("sup_n=" + fmt_real(dev.sup_n));
  t.footer.push_back("mean_abs_x=" + fmt_real(dev.mean_abs_x));
  t.footer.push_back("mean_abs_n=" + fmt_real(dev.mean_abs_n));
  emit(t, o);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled game-environment dynamics: fixed points, bifurcations,"
               " cycles, and a finite-population check"};
  app.require_subcommand(1);

  CommonOpts common;

  auto* coeffs = app.add_subcommand(
      "coeffs", "Derived payoff coefficients and assumption checks");
  add_common_options(coeffs, common);

  auto* fps = app.add_subcommand("fixed-points",
                                 "All fixed points with stability at one beta");
  add_common_options(fps, common);

  auto* thr = app.add_subcommand("thresholds",
                                 "beta_int, beta_hat, beta_h and optional beta_u");
  add_common_options(thr, common);
  bool estimate_bu = false;
  std::optional<double> bu_lo, bu_hi;
  thr->add_flag("--estimate-beta-u", estimate_bu,
                "bisect for the cycle-collapse rationality");
  thr->add_option("--beta-u-min", bu_lo, "lower bracket for beta_u");
  thr->add_option("--beta-u-max", bu_hi, "upper bracket for beta_u");

  auto* sim = app.add_subcommand("simulate", "Integrate one trajectory");
  add_common_options(sim, common);
  double x0 = 0.5, n0 = 0.5, t_end = 100.0;
  std::string method = "rk4";
  std::size_t stride = 1;
  sim->add_option("--x0", x0, "initial cooperator fraction");
  sim->add_option("--n0", n0, "initial environmental state");
  sim->add_option("--t-end", t_end, "integration horizon");
  sim->add_option("--method", method, "rk4 or adaptive45");
  sim->add_option("--record-stride", stride, "keep every k-th sample");

  auto* swp = app.add_subcommand("sweep",
                                 "Bifurcation sweep over the rationality");
  add_common_options(swp, common);
  double beta_min = 0.0, beta_max = 10.0;
  int points = 200;
  swp->add_option("--beta-min", beta_min, "lowest beta");
  swp->add_option("--beta-max", beta_max, "highest beta");
  swp->add_option("--points", points, "base grid size");

  auto* por = app.add_subcommand("portrait",
                                 "Trajectories from a lattice of initial conditions");
  add_common_options(por, common);
  int grid = 4;
  double por_t_end = 150.0;
  std::size_t por_stride = 5;
  por->add_option("--grid", grid, "lattice size per axis");
  por->add_option("--t-end", por_t_end, "integration horizon");
  por->add_option("--record-stride", por_stride, "keep every k-th sample");

  auto* abm = app.add_subcommand(
      "abm", "Finite-population run against the mean dynamics");
  add_common_options(abm, common);
  std::size_t agents = 1000;
  double abm_x0 = 0.5, abm_n0 = 0.5, abm_t_end = 50.0, env_step = 0.01;
  std::size_t abm_stride = 1;
  abm->add_option("--agents", agents, "population size");
  abm->add_option("--x0", abm_x0, "initial cooperator fraction");
  abm->add_option("--n0", abm_n0, "initial environmental state");
  abm->add_option("--t-end", abm_t_end, "simulation horizon");
  abm->add_option("--env-step", env_step, "Euler substep for the resource");
  abm->add_option("--record-stride", abm_stride, "keep every k-th revision");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (coeffs->parsed()) return cmd_coeffs(common);
    if (fps->parsed()) return cmd_fixed_points(common);
    if (thr->parsed()) return cmd_thresholds(common, estimate_bu, bu_lo, bu_hi);
    if (sim->parsed()) return cmd_simulate(common, x0, n0, t_end, method, stride);
    if (swp->parsed()) return cmd_sweep(common, beta_min, beta_max, points);
    if (por->parsed()) return cmd_portrait(common, grid, por_t_end, por_stride);
    if (abm->parsed())
      return cmd_abm(common, agents, abm_x0, abm_n0, abm_t_end, env_step,
                     abm_stride);
  } catch (const ecodyn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
