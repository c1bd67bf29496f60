#include "nsk/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "pow_util.hpp"

namespace nsk {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed for '" + path + "'");
}

Field initial_density(const Grid& g, const InitSpec& init) {
  const double L = g.length();
  Field rho = g.make_field(init.mean);
  for (std::size_t k = 0; k < init.cos_amps.size(); ++k) {
    const double w = 2.0 * kPi * static_cast<double>(k + 1) / L;
    for (int j = 0; j < g.n(); ++j)
      rho.v[j] += init.cos_amps[k] * std::cos(w * g.node(j));
  }
  for (std::size_t k = 0; k < init.sin_amps.size(); ++k) {
    const double w = 2.0 * kPi * static_cast<double>(k + 1) / L;
    for (int j = 0; j < g.n(); ++j)
      rho.v[j] += init.sin_amps[k] * std::sin(w * g.node(j));
  }
  return rho;
}

RateFit rate_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("rate_fit: need >= 2 pairs");
  RateFit fit;
  fit.xs = xs;
  fit.ys = ys;
  const std::size_t n = xs.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("rate_fit: data must be positive");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("rate_fit: xs must be distinct");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = fit.slope * lx[i] + fit.intercept;
    ss_res += (ly[i] - pred) * (ly[i] - pred);
    ss_tot += (ly[i] - my) * (ly[i] - my);
  }
  fit.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot)
                               : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

double ratio_spread(const std::vector<double>& ys, const std::vector<double>& model) {
  if (ys.size() != model.size() || ys.empty())
    throw std::invalid_argument("ratio_spread: size mismatch");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (!(model[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("ratio_spread: data must be positive");
    const double r = ys[i] / model[i];
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi / lo;
}

std::string diagnostics_csv(const Trajectory& traj) {
  std::string out =
      "t,mass,energy,psi_gamma,rel_kinetic,rel_drift,h_e_rel,friction_diss,"
      "viscous_diss\n";
  for (const DiagRecord& r : traj.records) {
    out += format_g17(r.t);
    out += ',';
    out += format_g17(r.mass);
    out += ',';
    out += format_g17(r.energy);
    out += ',';
    out += format_g17(r.psi_gamma);
    out += ',';
    out += format_g17(r.rel_kinetic);
    out += ',';
    out += format_g17(r.rel_drift);
    out += ',';
    out += format_g17(r.h_e_rel);
    out += ',';
    out += format_g17(r.friction_diss);
    out += ',';
    out += format_g17(r.viscous_diss);
    out += '\n';
  }
  return out;
}

std::string rate_fit_json(const RateFit& fit, bool valid) {
  json j;
  j["xs"] = fit.xs;
  j["ys"] = fit.ys;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["r_squared"] = fit.r_squared;
  j["ratio_spread"] = fit.ratio_spread;
  j["valid"] = valid;
  return j.dump(2) + "\n";
}

std::string checks_json(const CheckSuite& suite) {
  json arr = json::array();
  for (const CheckResult& c : suite.results) {
    arr.push_back({{"name", c.name},
                   {"pass", c.pass},
                   {"max_residual", c.max_residual},
                   {"detail", c.detail}});
  }
  json j;
  j["checks"] = arr;
  j["pass"] = suite.pass;
  return j.dump(2) + "\n";
}

namespace {

json config_as_json(const StudyConfig& cfg) {
  return json::parse(resolved_config_json(cfg));
}

json version_block() { return json{{"nskdrift", kVersion}}; }

State make_initial_state(const Field& rho, const Params& p) {
  const Grid& g = *rho.grid;
  if (min_value(rho) <= p.rho_floor)
    throw ConfigError("config: initial density does not stay above rho_floor");
  State st;
  st.time = 0.0;
  st.rho = rho;
  st.m = g.make_field();
  Field mu = g.make_field();
  for (int j = 0; j < g.n(); ++j) mu.v[j] = capillary_mu(rho.v[j], p, 0);
  st.J = g.deriv(mu, 1);
  return st;
}

std::vector<StrongLift> lifts_from_snapshots(const Trajectory& traj) {
  std::vector<StrongLift> lifts;
  lifts.reserve(traj.snapshots.size());
  for (const State& s : traj.snapshots) {
    const Grid& g = *s.rho.grid;
    StrongLift l;
    l.time = s.time;
    l.rho = s.rho;
    l.m = s.m;
    l.J = s.J;
    l.u = g.make_field();
    l.v = g.make_field();
    for (int j = 0; j < g.n(); ++j) {
      l.u.v[j] = s.m.v[j] / s.rho.v[j];
      l.v.v[j] = s.J.v[j] / s.rho.v[j];
    }
    l.e = g.make_field();
    lifts.push_back(std::move(l));
  }
  return lifts;
}

void write_snapshot_fields(const std::string& dir, const Trajectory& traj) {
  fs::create_directories(dir);
  char name[64];
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const State& s = traj.snapshots[k];
    std::snprintf(name, sizeof name, "/rho_%05zu.bin", k);
    write_field_binary(s.rho, dir + name, "rho", s.time);
    std::snprintf(name, sizeof name, "/m_%05zu.bin", k);
    write_field_binary(s.m, dir + name, "m", s.time);
    std::snprintf(name, sizeof name, "/J_%05zu.bin", k);
    write_field_binary(s.J, dir + name, "J", s.time);
  }
}

std::string run_dir_name(std::size_t index, double epsilon) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "run_%zu_eps_%g", index, epsilon);
  return buf;
}

double psi_sup_of(const Trajectory& traj) {
  double s = 0.0;
  for (const DiagRecord& r : traj.records) s = std::max(s, r.psi_gamma);
  return s;
}

}  // namespace

RelaxationStudy run_relaxation_study(const StudyConfig& cfg_in) {
  StudyConfig cfg = cfg_in;
  cfg.mode = RunMode::Relaxation;
  cfg.validate_and_resolve();
  fs::create_directories(cfg.output_dir);

  auto grid = Grid::create(cfg.grid_n, cfg.params.domain_length);
  const Field rho0 = initial_density(*grid, cfg.init);
  if (min_value(rho0) <= cfg.params.rho_floor)
    throw ConfigError("config: initial density does not stay above rho_floor");

  json manifest;
  manifest["mode"] = mode_name(RunMode::Relaxation);
  manifest["config"] = config_as_json(cfg);
  manifest["version"] = version_block();
  manifest["runs"] = json::array();
  auto flush_manifest = [&]() {
    write_text_file(cfg.output_dir + "/manifest.json", manifest.dump(2) + "\n");
  };
  flush_manifest();

  // The limit trajectory does not depend on epsilon or nu: solve it once on
  // the shared sample schedule, lift it per epsilon.
  GfOptions gopt;
  gopt.sample_every = cfg.sample_every;
  gopt.cfl_number = cfg.cfl_number;
  gopt.max_steps = cfg.max_steps;
  const GfTrajectory ref = solve_gradient_flow(rho0, cfg.t_end, cfg.params, gopt);

  RelaxationStudy study;
  std::string plot = "epsilon,t,psi_gamma\n";
  bool aborted = false;
  for (std::size_t i = 0; i < cfg.epsilon_list.size() && !aborted; ++i) {
    RunSummary rs;
    rs.epsilon = cfg.epsilon_list[i];
    rs.nu = cfg.nu_policy.nu_for(rs.epsilon);
    rs.dir = run_dir_name(i, rs.epsilon);
    Params pe = cfg.params;
    pe.epsilon = rs.epsilon;
    pe.nu = rs.nu;
    try {
      const std::vector<StrongLift> lifts = lift_trajectory(ref, pe);
      const State init = well_prepared_state(lifts.front());
      SimulateOptions opt;
      opt.sample_every = cfg.sample_every;
      opt.dt_fixed = cfg.dt_fixed;
      opt.cfl_number = cfg.cfl_number;
      opt.max_steps = cfg.max_steps;
      opt.keep_snapshots = cfg.write_fields;
      opt.lifts = &lifts;
      const Trajectory traj = simulate(init, cfg.t_end, pe, opt);
      rs.psi_sup = psi_sup_of(traj);
      rs.psi_end = traj.records.back().psi_gamma;
      rs.ok = true;
      fs::create_directories(cfg.output_dir + "/" + rs.dir);
      write_text_file(cfg.output_dir + "/" + rs.dir + "/diagnostics.csv",
                      diagnostics_csv(traj));
      if (cfg.write_fields)
        write_snapshot_fields(cfg.output_dir + "/" + rs.dir + "/fields", traj);
      if (cfg.emit_plot_data)
        for (const DiagRecord& r : traj.records) {
          plot += format_g17(rs.epsilon);
          plot += ',';
          plot += format_g17(r.t);
          plot += ',';
          plot += format_g17(r.psi_gamma);
          plot += '\n';
        }
    } catch (const std::exception& ex) {
      rs.ok = false;
      rs.error = ex.what();
      aborted = true;
      manifest["aborted_at"] = {{"epsilon", rs.epsilon}, {"error", rs.error}};
    }
    manifest["runs"].push_back({{"epsilon", rs.epsilon},
                                {"nu", rs.nu},
                                {"dir", rs.dir},
                                {"ok", rs.ok},
                                {"error", rs.error},
                                {"psi_sup", rs.psi_sup},
                                {"psi_end", rs.psi_end}});
    study.runs.push_back(std::move(rs));
    flush_manifest();
  }

  study.all_ok = !aborted && !study.runs.empty();

  std::vector<double> xs, sup_ys, end_ys, model;
  for (const RunSummary& r : study.runs)
    if (r.ok && r.psi_sup > 0.0 && r.psi_end > 0.0) {
      xs.push_back(r.epsilon);
      sup_ys.push_back(r.psi_sup);
      end_ys.push_back(r.psi_end);
      model.push_back(std::pow(r.epsilon, 4) + r.nu * r.epsilon);
    }
  if (xs.size() >= 2) {
    study.fit = rate_fit(xs, sup_ys);
    study.fit.ratio_spread = ratio_spread(end_ys, model);
    study.fit_valid = true;
    study.monotone = true;
    for (std::size_t i = 1; i < end_ys.size(); ++i)
      if (!(end_ys[i] < end_ys[i - 1])) study.monotone = false;
  }
  manifest["fit"] = json::parse(rate_fit_json(study.fit, study.fit_valid));
  manifest["monotone"] = study.monotone;
  flush_manifest();
  write_text_file(cfg.output_dir + "/rate_fit.json",
                  rate_fit_json(study.fit, study.fit_valid));
  if (cfg.emit_plot_data)
    write_text_file(cfg.output_dir + "/plot_data.csv", plot);
  return study;
}

WeakStrongStudy run_weakstrong_study(const StudyConfig& cfg_in) {
  StudyConfig cfg = cfg_in;
  cfg.mode = RunMode::WeakStrong;
  cfg.validate_and_resolve();
  fs::create_directories(cfg.output_dir);

  Params pw = cfg.params;
  pw.epsilon = 1.0;
  pw.nu = cfg.nu_policy.nu_for(1.0);
  pw.friction = false;  // unscaled system: no relaxation, viscosity only
  if (pw.lame.kind != LameKind::BdMatched)
    throw ConfigError(
        "config: weakstrong study requires the capillarity-matched viscous pair "
        "(physics.lame = \"bd_matched\")");
  pw.validate(StudyMode::WeakStrong);

  auto grid = Grid::create(cfg.grid_n, pw.domain_length);
  const Field rho0 = initial_density(*grid, cfg.init);

  json manifest;
  manifest["mode"] = mode_name(RunMode::WeakStrong);
  manifest["config"] = config_as_json(cfg);
  manifest["version"] = version_block();
  auto flush_manifest = [&]() {
    write_text_file(cfg.output_dir + "/manifest.json", manifest.dump(2) + "\n");
  };
  flush_manifest();

  WeakStrongStudy study;
  SimulateOptions base_opt;
  base_opt.sample_every = cfg.sample_every;
  base_opt.dt_fixed = cfg.dt_fixed;
  base_opt.cfl_number = cfg.cfl_number;
  base_opt.max_steps = cfg.max_steps;

  try {
    const State init = make_initial_state(rho0, pw);
    study.energy_scale = entropy_total(init, pw);

    SimulateOptions opt_ref = base_opt;
    opt_ref.keep_snapshots = true;
    const Trajectory ref = simulate(init, cfg.t_end, pw, opt_ref);
    const std::vector<StrongLift> lifts = lifts_from_snapshots(ref);
    fs::create_directories(cfg.output_dir + "/reference");
    write_text_file(cfg.output_dir + "/reference/diagnostics.csv",
                    diagnostics_csv(ref));
    if (cfg.write_fields)
      write_snapshot_fields(cfg.output_dir + "/reference/fields", ref);

    // Twin: same data, independent step sequence, measured against the lift.
    SimulateOptions opt_twin = base_opt;
    opt_twin.keep_snapshots = false;
    opt_twin.lifts = &lifts;
    if (cfg.dt_fixed > 0.0)
      opt_twin.dt_fixed = cfg.dt_fixed / 2.0;
    else
      opt_twin.cfl_number = cfg.cfl_number / 2.0;
    const Trajectory twin = simulate(init, cfg.t_end, pw, opt_twin);
    study.twin_psi_max = psi_sup_of(twin);
    fs::create_directories(cfg.output_dir + "/twin");
    write_text_file(cfg.output_dir + "/twin/diagnostics.csv", diagnostics_csv(twin));

    auto gronwall = [&](double delta, const std::string& sub) {
      GronwallFit fit;
      fit.delta = delta;
      fit.dir = sub;
      Field pert = rho0;
      const double w = 2.0 * kPi * cfg.perturbation.mode_number / pw.domain_length;
      for (int j = 0; j < grid->n(); ++j)
        pert.v[j] += delta * std::sin(w * grid->node(j));
      const State pinit = make_initial_state(pert, pw);
      SimulateOptions opt = base_opt;
      opt.keep_snapshots = false;
      opt.lifts = &lifts;
      const Trajectory traj = simulate(pinit, cfg.t_end, pw, opt);
      fit.psi0 = traj.records.front().psi_gamma;
      fit.psi_end = traj.records.back().psi_gamma;
      if (!(fit.psi0 > 0.0))
        throw std::runtime_error("perturbed run has zero initial relative entropy");
      fit.c_hat = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 1; k < traj.records.size(); ++k) {
        const DiagRecord& r = traj.records[k];
        if (r.t > 0.0 && r.psi_gamma > 0.0)
          fit.c_hat = std::max(fit.c_hat, std::log(r.psi_gamma / fit.psi0) / r.t);
      }
      if (!std::isfinite(fit.c_hat))
        throw std::runtime_error("perturbed run left no usable growth samples");
      fs::create_directories(cfg.output_dir + "/" + sub);
      write_text_file(cfg.output_dir + "/" + sub + "/diagnostics.csv",
                      diagnostics_csv(traj));
      return fit;
    };
    study.full = gronwall(cfg.perturbation.delta, "delta_full");
    study.half = gronwall(cfg.perturbation.delta / 2.0, "delta_half");
    study.c_rel_change = std::abs(study.full.c_hat - study.half.c_hat) /
                         std::max(std::abs(study.full.c_hat), 1e-30);
    study.all_ok = true;
  } catch (const std::exception& ex) {
    study.all_ok = false;
    study.error = ex.what();
    manifest["aborted_at"] = {{"error", study.error}};
  }

  manifest["weakstrong"] = {
      {"twin_psi_max", study.twin_psi_max},
      {"energy_scale", study.energy_scale},
      {"delta_full",
       {{"delta", study.full.delta},
        {"psi0", study.full.psi0},
        {"psi_end", study.full.psi_end},
        {"c_hat", study.full.c_hat},
        {"dir", study.full.dir}}},
      {"delta_half",
       {{"delta", study.half.delta},
        {"psi0", study.half.psi0},
        {"psi_end", study.half.psi_end},
        {"c_hat", study.half.c_hat},
        {"dir", study.half.dir}}},
      {"c_rel_change", study.c_rel_change},
      {"all_ok", study.all_ok}};
  flush_manifest();
  return study;
}

CheckSuite run_check_suite(const StudyConfig& cfg_in) {
  StudyConfig cfg = cfg_in;
  cfg.mode = RunMode::Checks;
  cfg.validate_and_resolve();
  const Params& p = cfg.params;
  const double lo = cfg.checks.lo, hi = cfg.checks.hi;
  const std::int64_t n_samples = cfg.checks.n_samples;

  CheckSuite suite;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  char detail[160];

  {
    // p = rho h' - h, against the independent rho^gamma + rho e' - e assembly.
    double worst = 0.0;
    for (std::int64_t k = 0; k < n_samples; ++k) {
      const double r = dist(rng);
      const double lhs = pressure(r, p, 0);
      const double rhs = r * enthalpy(r, p, 1) - enthalpy(r, p, 0);
      const double scale = std::abs(r * enthalpy(r, p, 1)) + std::abs(enthalpy(r, p, 0));
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(scale, 1e-300));
    }
    std::snprintf(detail, sizeof detail, "max relative residual %.3g", worst);
    suite.results.push_back(
        {"pressure_enthalpy_identity", worst <= 1e-11, worst, detail});
  }
  {
    // mu'(rho) = sqrt(rho k(rho)).
    double worst = 0.0;
    for (std::int64_t k = 0; k < n_samples; ++k) {
      const double r = dist(rng);
      const double lhs = capillary_mu(r, p, 1);
      const double rhs = std::sqrt(r * capillarity_k(r, p, 0));
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300));
    }
    std::snprintf(detail, sizeof detail, "max relative residual %.3g", worst);
    suite.results.push_back({"mu_prime_sqrt_identity", worst <= 1e-11, worst, detail});
  }
  {
    // lambda = (s+1) mu, against the Bresch-Desjardins form 2(mu' rho - mu).
    double worst = 0.0;
    for (std::int64_t k = 0; k < n_samples; ++k) {
      const double r = dist(rng);
      const double lhs = lame_lambda(r, p);
      const double rhs = 2.0 * (capillary_mu(r, p, 1) * r - capillary_mu(r, p, 0));
      const double scale =
          2.0 * (std::abs(capillary_mu(r, p, 1) * r) + std::abs(capillary_mu(r, p, 0)));
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(scale, 1e-300));
    }
    std::snprintf(detail, sizeof detail, "max relative residual %.3g", worst);
    suite.results.push_back({"lambda_bd_identity", worst <= 1e-11, worst, detail});
  }
  {
    // Relative pressure decomposition through the two enthalpy parts.
    double worst = 0.0;
    for (std::int64_t k = 0; k < n_samples; ++k) {
      const double r = dist(rng);
      const double rb = dist(rng);
      worst = std::max(worst, rel_pressure_identity_residual(r, rb, p));
    }
    std::snprintf(detail, sizeof detail, "max relative residual %.3g", worst);
    suite.results.push_back(
        {"relative_pressure_split", worst <= 1e-11, worst, detail});
  }
  {
    // Pointwise Bregman three-term form vs the closed relative entropy.
    std::uniform_real_distribution<double> vel(-1.0, 1.0);
    double worst = 0.0;
    for (std::int64_t k = 0; k < n_samples; ++k) {
      const double r = dist(rng), rb = dist(rng);
      const double u = vel(rng), ub = vel(rng);
      const double v = vel(rng), vb = vel(rng);
      const double m = r * u, J = r * v;
      const double mb = rb * ub, Jb = rb * vb;
      auto eta = [&](double rho, double mm, double JJ) {
        return 0.5 * mm * mm / rho + enthalpy(rho, p, 0) + 0.5 * JJ * JJ / rho;
      };
      const double eta_rho_bar = -0.5 * ub * ub - 0.5 * vb * vb + enthalpy(rb, p, 1);
      const double three = eta(r, m, J) - eta(rb, mb, Jb) - eta_rho_bar * (r - rb) -
                           ub * (m - mb) - vb * (J - Jb);
      const RelEnthalpy re = rel_enthalpy(r, rb, p);
      const double closed = 0.5 * r * (u - ub) * (u - ub) +
                            0.5 * r * (v - vb) * (v - vb) + re.h_gamma + re.h_e;
      const double scale = std::abs(eta(r, m, J)) + std::abs(eta(rb, mb, Jb)) +
                           std::abs(eta_rho_bar * (r - rb)) + std::abs(ub * (m - mb)) +
                           std::abs(vb * (J - Jb));
      worst = std::max(worst, std::abs(three - closed) / std::max(scale, 1e-300));
    }
    std::snprintf(detail, sizeof detail, "max relative residual %.3g", worst);
    suite.results.push_back(
        {"bregman_relative_entropy", worst <= 1e-11, worst, detail});
  }
  if (p.bump.amplitude > 0.0) {
    // The non-monotone window must appear exactly above the threshold
    // amplitude (p' is affine in the amplitude).
    const double thresh = find_bump_threshold(p);
    const auto window = check_nonmonotone(p);
    const bool expect = p.bump.amplitude > thresh;
    const bool pass = expect == window.has_value();
    if (window)
      std::snprintf(detail, sizeof detail,
                    "threshold %.6g, amplitude %.6g, window [%.6g, %.6g]", thresh,
                    p.bump.amplitude, window->first, window->second);
    else
      std::snprintf(detail, sizeof detail,
                    "threshold %.6g, amplitude %.6g, no window", thresh,
                    p.bump.amplitude);
    suite.results.push_back({"nonmonotone_window", pass, 0.0, detail});
  }
  {
    const PointwiseReport rep = check_pointwise_inequalities(
        p, lo, hi, cfg.checks.grid_n, n_samples, cfg.seed);
    std::snprintf(detail, sizeof detail,
                  "c_drift %.6g (diag %.6g), c_gamma %.6g (diag %.6g), "
                  "violations %zu/%zu",
                  rep.c_drift, rep.c_drift_diag, rep.c_gamma, rep.c_gamma_diag,
                  rep.violations_drift.size(), rep.violations_gamma.size());
    suite.results.push_back(
        {"pointwise_inequalities", rep.pass && !rep.degenerate, 0.0, detail});
  }

  suite.pass = true;
  for (const CheckResult& c : suite.results)
    if (!c.pass) suite.pass = false;
  return suite;
}

Trajectory run_single(const StudyConfig& cfg_in) {
  StudyConfig cfg = cfg_in;
  cfg.mode = RunMode::SingleRun;
  cfg.validate_and_resolve();
  fs::create_directories(cfg.output_dir);

  json manifest;
  manifest["mode"] = mode_name(RunMode::SingleRun);
  manifest["config"] = config_as_json(cfg);
  manifest["version"] = version_block();
  write_text_file(cfg.output_dir + "/manifest.json", manifest.dump(2) + "\n");

  auto grid = Grid::create(cfg.grid_n, cfg.params.domain_length);
  const State init = make_initial_state(initial_density(*grid, cfg.init), cfg.params);
  SimulateOptions opt;
  opt.sample_every = cfg.sample_every;
  opt.dt_fixed = cfg.dt_fixed;
  opt.cfl_number = cfg.cfl_number;
  opt.max_steps = cfg.max_steps;
  opt.keep_snapshots = cfg.write_fields;
  const Trajectory traj = simulate(init, cfg.t_end, cfg.params, opt);

  write_text_file(cfg.output_dir + "/diagnostics.csv", diagnostics_csv(traj));
  if (cfg.write_fields) write_snapshot_fields(cfg.output_dir + "/fields", traj);
  if (cfg.emit_plot_data) {
    std::string plot = "epsilon,t,psi_gamma\n";
    for (const DiagRecord& r : traj.records) {
      plot += format_g17(cfg.params.epsilon);
      plot += ',';
      plot += format_g17(r.t);
      plot += ',';
      plot += format_g17(r.psi_gamma);
      plot += '\n';
    }
    write_text_file(cfg.output_dir + "/plot_data.csv", plot);
  }
  json times = json::array();
  for (const DiagRecord& r : traj.records) times.push_back(r.t);
  manifest["sample_times"] = times;
  manifest["final"] = {{"mass", traj.records.back().mass},
                       {"energy", traj.records.back().energy}};
  write_text_file(cfg.output_dir + "/manifest.json", manifest.dump(2) + "\n");
  return traj;
}

GfTrajectory run_gradient_flow(const StudyConfig& cfg_in) {
  StudyConfig cfg = cfg_in;
  cfg.mode = RunMode::GradientFlow;
  cfg.validate_and_resolve();
  fs::create_directories(cfg.output_dir);

  json manifest;
  manifest["mode"] = mode_name(RunMode::GradientFlow);
  manifest["config"] = config_as_json(cfg);
  manifest["version"] = version_block();
  write_text_file(cfg.output_dir + "/manifest.json", manifest.dump(2) + "\n");

  auto grid = Grid::create(cfg.grid_n, cfg.params.domain_length);
  const Field rho0 = initial_density(*grid, cfg.init);
  if (min_value(rho0) <= cfg.params.rho_floor)
    throw ConfigError("config: initial density does not stay above rho_floor");
  GfOptions opt;
  opt.sample_every = cfg.sample_every;
  opt.dt_fixed = cfg.dt_fixed;
  opt.cfl_number = cfg.cfl_number;
  opt.max_steps = cfg.max_steps;
  const GfTrajectory traj = solve_gradient_flow(rho0, cfg.t_end, cfg.params, opt);

  std::string csv = "t,mass,energy_gf,rho_min,spectral_tail\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const Field& rho = traj.rho[k];
    State st;
    st.time = traj.times[k];
    st.rho = rho;
    st.m = grid->make_field();
    st.J = grid->make_field();
    csv += format_g17(traj.times[k]);
    csv += ',';
    csv += format_g17(grid->integrate(rho));
    csv += ',';
    csv += format_g17(entropy_total_gradform(st, cfg.params));
    csv += ',';
    csv += format_g17(min_value(rho));
    csv += ',';
    csv += format_g17(grid->spectral_tail_ratio(rho));
    csv += '\n';
  }
  write_text_file(cfg.output_dir + "/diagnostics.csv", csv);
  if (cfg.write_fields) {
    fs::create_directories(cfg.output_dir + "/fields");
    char name[64];
    for (std::size_t k = 0; k < traj.rho.size(); ++k) {
      std::snprintf(name, sizeof name, "/rho_%05zu.bin", k);
      write_field_binary(traj.rho[k], cfg.output_dir + "/fields" + name, "rho",
                         traj.times[k]);
    }
  }
  json times = json::array();
  for (double t : traj.times) times.push_back(t);
  manifest["sample_times"] = times;
  write_text_file(cfg.output_dir + "/manifest.json", manifest.dump(2) + "\n");
  return traj;
}

RateFit refit_sweep_dir(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json", std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + dir + "/manifest.json'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::parse_error& ex) {
    throw ConfigError(dir + "/manifest.json: " + ex.what());
  }
  if (!manifest.contains("runs") || !manifest["runs"].is_array())
    throw ConfigError(dir + "/manifest.json: missing runs array");

  std::vector<double> xs, sup_ys, end_ys, model;
  for (const json& run : manifest["runs"]) {
    if (!run.value("ok", false)) continue;
    const double eps = run.at("epsilon").get<double>();
    const double nu = run.value("nu", 0.0);
    const std::string path = dir + "/" + run.at("dir").get<std::string>() +
                             "/diagnostics.csv";
    std::ifstream csv(path, std::ios::binary);
    if (!csv) throw ConfigError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(csv, line))
      throw ConfigError(path + ": empty diagnostics file");
    double sup = 0.0, last = 0.0;
    bool any = false;
    while (std::getline(csv, line)) {
      if (line.empty()) continue;
      // psi_gamma is the 4th column of the pinned header.
      std::size_t pos = 0;
      for (int c = 0; c < 3; ++c) {
        pos = line.find(',', pos);
        if (pos == std::string::npos)
          throw ConfigError(path + ": malformed diagnostics row");
        ++pos;
      }
      const double psi = std::strtod(line.c_str() + pos, nullptr);
      sup = std::max(sup, psi);
      last = psi;
      any = true;
    }
    if (!any) throw ConfigError(path + ": no data rows");
    xs.push_back(eps);
    sup_ys.push_back(sup);
    end_ys.push_back(last);
    model.push_back(std::pow(eps, 4) + nu * eps);
  }
  if (xs.size() < 2)
    throw ConfigError(dir + ": fewer than two completed runs to fit");
  RateFit fit = rate_fit(xs, sup_ys);
  fit.ratio_spread = ratio_spread(end_ys, model);
  return fit;
}

}  // namespace nsk
