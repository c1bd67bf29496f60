/// @file study.hpp
/// @brief Batch experiment drivers: relaxation-rate sweeps, weak-strong
///        perturbation studies, the config-driven check suite, rate fitting,
///        and the deterministic output writers they share.

#pragma once

#include <string>
#include <vector>

#include "nsk/config.hpp"
#include "nsk/darcy.hpp"
#include "nsk/dynamics.hpp"
#include "nsk/entropy.hpp"

namespace nsk {

inline constexpr const char* kVersion = "0.1.0";

struct RateFit {
  std::vector<double> xs;
  std::vector<double> ys;
  double slope = 0.0;      // log y = slope * log x + intercept
  double intercept = 0.0;
  double r_squared = 0.0;
  double ratio_spread = 0.0;  // set by ratio_spread() when a model is supplied
};

/// Least squares in log-log coordinates; needs >= 2 pairs, all positive.
RateFit rate_fit(const std::vector<double>& xs, const std::vector<double>& ys);

/// max/min over i of ys[i] / model[i]; model entries must be positive.
double ratio_spread(const std::vector<double>& ys, const std::vector<double>& model);

struct RunSummary {
  double epsilon = 0.0;
  double nu = 0.0;
  double psi_sup = 0.0;  // sup over samples of psi_gamma
  double psi_end = 0.0;
  bool ok = false;
  std::string error;
  std::string dir;  // subdirectory holding this run's outputs
};

struct RelaxationStudy {
  std::vector<RunSummary> runs;
  RateFit fit;  // sup_t psi_gamma against epsilon, completed runs only
  bool fit_valid = false;
  bool all_ok = false;
  bool monotone = false;  // psi_gamma(T) strictly decreasing along the sweep
};

/// For each epsilon: lift the (epsilon-independent) gradient-flow reference,
/// start well-prepared, integrate the scaled system, record the relative
/// entropy, then fit the decay order. A failed run aborts the remainder of
/// the sweep; completed outputs and the manifest survive.
RelaxationStudy run_relaxation_study(const StudyConfig& cfg);

struct GronwallFit {
  double delta = 0.0;
  double psi0 = 0.0;
  double psi_end = 0.0;
  double c_hat = 0.0;  // max over samples t > 0 of log(psi(t)/psi0) / t
  std::string dir;
};

struct WeakStrongStudy {
  double twin_psi_max = 0.0;  // sup_t relative entropy between the twin runs
  double energy_scale = 0.0;  // total entropy of the shared initial data
  GronwallFit full;           // perturbation delta
  GronwallFit half;           // perturbation delta / 2
  double c_rel_change = 0.0;  // |full.c_hat - half.c_hat| / max(|full.c_hat|, floor)
  bool all_ok = false;
  std::string error;
};

/// Unscaled system (epsilon = 1, friction off): twin runs of identical data
/// under different step sizes, plus delta and delta/2 density perturbations
/// measured against the unperturbed reference.
WeakStrongStudy run_weakstrong_study(const StudyConfig& cfg);

struct CheckResult {
  std::string name;
  bool pass = false;
  double max_residual = 0.0;
  std::string detail;
};

struct CheckSuite {
  std::vector<CheckResult> results;
  bool pass = false;
};

/// Constitutive identity battery plus the pointwise inequality certification,
/// sampled on cfg.checks with cfg.seed.
CheckSuite run_check_suite(const StudyConfig& cfg);

/// Single trajectory of the scaled system from the configured initial data
/// (m = 0, J compatible); writes diagnostics and optional field snapshots.
Trajectory run_single(const StudyConfig& cfg);

/// Gradient-flow trajectory from the configured initial data, with its own
/// diagnostics (mass, free energy, min density, spectral tail).
GfTrajectory run_gradient_flow(const StudyConfig& cfg);

/// mean + sum_k cos/sin modes on the grid nodes.
Field initial_density(const Grid& g, const InitSpec& init);

/// Re-fits a saved sweep directory from its manifest.json and per-run
/// diagnostics; writes nothing.
RateFit refit_sweep_dir(const std::string& dir);

// Deterministic writers: fixed column order, %.17g numbers, no timestamps.
void write_text_file(const std::string& path, const std::string& text);
std::string format_g17(double x);
std::string diagnostics_csv(const Trajectory& traj);
std::string rate_fit_json(const RateFit& fit, bool valid);
std::string checks_json(const CheckSuite& suite);

}  // namespace nsk
