#include "nsk/cli.hpp"

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nsk/study.hpp"

namespace nsk {

namespace {

struct Overrides {
  std::string config_path;
  int grid_n = 0;
  std::vector<double> epsilon;
  double nu = 0.0;
  double t_end = 0.0;
  std::string output;
  std::uint64_t seed = 0;
  bool emit_plot_data = false;

  CLI::Option* opt_n = nullptr;
  CLI::Option* opt_nu = nullptr;
  CLI::Option* opt_t_end = nullptr;
  CLI::Option* opt_output = nullptr;
  CLI::Option* opt_seed = nullptr;
};

void add_common_options(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "TOML or JSON study configuration");
  o.opt_n = sub->add_option("--N", o.grid_n, "grid resolution (power of two >= 16)");
  sub->add_option("--epsilon", o.epsilon, "comma-separated epsilon list")
      ->delimiter(',');
  o.opt_nu = sub->add_option("--nu", o.nu, "viscosity coefficient");
  o.opt_t_end = sub->add_option("--t-end", o.t_end, "final time");
  o.opt_output = sub->add_option("--output", o.output, "output directory");
  o.opt_seed = sub->add_option("--seed", o.seed, "RNG seed for randomized checks");
  sub->add_flag("--emit-plot-data", o.emit_plot_data,
                "write tidy (epsilon,t,psi_gamma) CSV");
}

StudyConfig resolve_config(const Overrides& o) {
  StudyConfig cfg;
  if (!o.config_path.empty()) cfg = load_config_file(o.config_path);
  if (o.opt_n->count() > 0) cfg.grid_n = o.grid_n;
  if (!o.epsilon.empty()) {
    cfg.epsilon_list = o.epsilon;
    cfg.params.epsilon = o.epsilon.front();
  }
  if (o.opt_nu->count() > 0) {
    cfg.params.nu = o.nu;
    cfg.nu_policy.kind = o.nu == 0.0 ? NuPolicyKind::Zero : NuPolicyKind::Fixed;
    cfg.nu_policy.value = o.nu;
  }
  if (o.opt_t_end->count() > 0) cfg.t_end = o.t_end;
  if (o.opt_output->count() > 0) cfg.output_dir = o.output;
  if (o.opt_seed->count() > 0) cfg.seed = o.seed;
  if (o.emit_plot_data) cfg.emit_plot_data = true;
  return cfg;
}

int do_run(const Overrides& o, bool force_gf) {
  StudyConfig cfg = resolve_config(o);
  if (force_gf || cfg.mode == RunMode::GradientFlow) {
    const GfTrajectory traj = run_gradient_flow(cfg);
    std::printf("gradient flow: %zu samples to t = %.6g, outputs in %s\n",
                traj.times.size(), traj.times.back(), cfg.output_dir.c_str());
    return 0;
  }
  const Trajectory traj = run_single(cfg);
  std::printf("run: %zu samples to t = %.6g, mass %.12g, energy %.12g, outputs in %s\n",
              traj.records.size(), traj.records.back().t, traj.records.back().mass,
              traj.records.back().energy, cfg.output_dir.c_str());
  return 0;
}

int do_relax(const Overrides& o) {
  const RelaxationStudy study = run_relaxation_study(resolve_config(o));
  for (const RunSummary& r : study.runs) {
    if (r.ok)
      std::printf("epsilon %.6g  nu %.6g  sup psi_gamma %.12g  psi_gamma(T) %.12g\n",
                  r.epsilon, r.nu, r.psi_sup, r.psi_end);
    else
      std::printf("epsilon %.6g  FAILED: %s\n", r.epsilon, r.error.c_str());
  }
  if (!study.all_ok) {
    std::fprintf(stderr, "relax: sweep aborted\n");
    return 2;
  }
  std::printf("fit: slope %.6g  r^2 %.6g  ratio_spread %.6g\n", study.fit.slope,
              study.fit.r_squared, study.fit.ratio_spread);
  if (!study.monotone) {
    std::fprintf(stderr, "relax: psi_gamma(T) not strictly decreasing in epsilon\n");
    return 1;
  }
  return 0;
}

int do_wsu(const Overrides& o) {
  const WeakStrongStudy study = run_weakstrong_study(resolve_config(o));
  if (!study.all_ok) {
    std::fprintf(stderr, "wsu: %s\n", study.error.c_str());
    return 2;
  }
  std::printf("twin sup psi_gamma %.6g (energy scale %.6g)\n", study.twin_psi_max,
              study.energy_scale);
  std::printf("gronwall c_hat: delta %.6g -> %.6g, delta/2 -> %.6g (change %.3g)\n",
              study.full.delta, study.full.c_hat, study.half.c_hat,
              study.c_rel_change);
  bool pass = true;
  if (!(study.twin_psi_max < 1e-10 * study.energy_scale)) {
    std::fprintf(stderr, "wsu: twin runs diverged beyond solver tolerance\n");
    pass = false;
  }
  if (!(study.c_rel_change <= 0.2)) {
    std::fprintf(stderr, "wsu: growth constant unstable under delta halving\n");
    pass = false;
  }
  return pass ? 0 : 1;
}

int do_check(const Overrides& o) {
  StudyConfig cfg = resolve_config(o);
  const CheckSuite suite = run_check_suite(cfg);
  for (const CheckResult& c : suite.results)
    std::printf("[%s] %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                c.detail.c_str());
  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    write_text_file(cfg.output_dir + "/checks.json", checks_json(suite));
  }
  return suite.pass ? 0 : 1;
}

int do_fit(const std::string& input) {
  const RateFit fit = refit_sweep_dir(input);
  write_text_file(input + "/rate_fit.json", rate_fit_json(fit, true));
  std::printf("fit: slope %.12g  intercept %.12g  r^2 %.6g  ratio_spread %.6g\n",
              fit.slope, fit.intercept, fit.r_squared, fit.ratio_spread);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"relaxation and weak-strong stability experiments for the "
               "augmented Navier-Stokes-Korteweg system"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Overrides o_run, o_relax, o_wsu, o_check;
  bool force_gf = false;
  CLI::App* c_run = app.add_subcommand("run", "single trajectory (scaled system "
                                              "or gradient flow)");
  add_common_options(c_run, o_run);
  c_run->add_flag("--gradient-flow", force_gf, "integrate the limit equation");
  CLI::App* c_relax = app.add_subcommand("relax", "relaxation-rate sweep over "
                                                  "epsilon");
  add_common_options(c_relax, o_relax);
  CLI::App* c_wsu = app.add_subcommand("wsu", "weak-strong perturbation study");
  add_common_options(c_wsu, o_wsu);
  CLI::App* c_check = app.add_subcommand("check", "constitutive and pointwise "
                                                  "inequality suites");
  add_common_options(c_check, o_check);
  std::string fit_input;
  CLI::App* c_fit = app.add_subcommand("fit", "re-fit a saved sweep directory");
  c_fit->add_option("--input", fit_input, "sweep output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (c_run->parsed()) return do_run(o_run, force_gf);
    if (c_relax->parsed()) return do_relax(o_relax);
    if (c_wsu->parsed()) return do_wsu(o_wsu);
    if (c_check->parsed()) return do_check(o_check);
    if (c_fit->parsed()) return do_fit(fit_input);
  } catch (const ConfigError& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  } catch (const SolverError& ex) {
    std::fprintf(stderr, "solver failure at t = %.9g: %s\n", ex.time, ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
  return 2;
}

}  // namespace nsk
