/// @file config.hpp
/// @brief Study configuration: schema, validation, and parsing from TOML or
///        JSON files with flag-style overrides layered on top.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsk/constitutive.hpp"

namespace nsk {

enum class RunMode { Relaxation, WeakStrong, Checks, SingleRun, GradientFlow };

enum class NuPolicyKind { Zero, Fixed, Scaled };

/// Viscosity selection for sweeps: Zero forces nu = 0, Fixed uses `value`
/// for every epsilon, Scaled uses value * epsilon.
struct NuPolicy {
  NuPolicyKind kind = NuPolicyKind::Zero;
  double value = 0.0;

  double nu_for(double epsilon) const {
    switch (kind) {
      case NuPolicyKind::Zero: return 0.0;
      case NuPolicyKind::Fixed: return value;
      case NuPolicyKind::Scaled: return value * epsilon;
    }
    return 0.0;
  }
};

/// Density offset delta * sin(2 pi q x / L) applied to the initial data of
/// the perturbed weak-strong runs.
struct Perturbation {
  double delta = 1e-3;
  int mode_number = 1;
};

/// Smooth periodic initial density: mean + sum_k cos_amps[k-1] cos(2 pi k x/L)
/// + sum_k sin_amps[k-1] sin(2 pi k x/L).
struct InitSpec {
  double mean = 1.0;
  std::vector<double> cos_amps;
  std::vector<double> sin_amps;
};

/// Box and sampling budget for the pointwise inequality certification.
struct CheckSpec {
  double lo = 0.5;
  double hi = 2.0;
  int grid_n = 2000;
  std::int64_t n_samples = 200000;
};

struct StudyConfig {
  RunMode mode = RunMode::SingleRun;
  Params params;
  int grid_n = 256;

  std::vector<double> epsilon_list;  // strictly decreasing; >= 2 for a fit
  NuPolicy nu_policy;

  double t_end = 0.5;
  double sample_every = 2.5e-3;
  double cfl_number = 0.3;
  double dt_fixed = 0.0;  // 0 = adaptive
  long long max_steps = 200000000;

  InitSpec init;
  Perturbation perturbation;
  CheckSpec checks;

  /// If positive, overrides bump.amplitude with this multiple of the
  /// non-monotonicity threshold amplitude for the configured (gamma, bump).
  double bump_amplitude_rel = 0.0;

  std::uint64_t seed = 42;
  std::string output_dir = "out";
  bool emit_plot_data = false;
  bool write_fields = false;

  /// Mode-dependent consistency checks; throws ConfigError. Also resolves
  /// bump_amplitude_rel into params.bump.amplitude.
  void validate_and_resolve();
};

/// Configuration file or override errors, carrying file/line/field context
/// in what().
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses TOML (default) or JSON (by .json extension or a leading '{').
StudyConfig load_config_file(const std::string& path);

/// Parses config text directly; `source_name` seeds error messages.
StudyConfig parse_config_text(const std::string& text, bool as_json,
                              const std::string& source_name);

/// Serializes the fully resolved configuration as a deterministic JSON
/// object string (sorted keys, round-trip float formatting).
std::string resolved_config_json(const StudyConfig& cfg);

const char* mode_name(RunMode mode);

}  // namespace nsk
