/// @file dynamics.hpp
/// @brief The scaled compressible system in (rho, m, J) variables: drift
///        velocity, stress assembly, stiff-friction Strang stepping with
///        SSP-RK3 transport, and the sampled simulation loop.

#pragma once

#include <stdexcept>
#include <vector>

#include "nsk/constitutive.hpp"
#include "nsk/grid.hpp"

namespace nsk {

struct State {
  double time = 0.0;
  Field rho;
  Field m;
  Field J;
};

/// Reference (strong) solution snapshot in lifted variables, the second
/// argument of every relative-entropy quantity. `e` is the residual the
/// reference leaves in the momentum equation; zero when the reference solves
/// the system exactly.
struct StrongLift {
  double time = 0.0;
  Field rho;
  Field m;
  Field J;
  Field u;
  Field v;
  Field e;
};

/// One diagnostics row. friction_diss accumulates the exact kinetic energy
/// removed by the closed-form friction half-steps; viscous_diss accumulates
/// the viscous dissipation rate by per-step trapezoid. The relative-entropy
/// entries are zero when no reference is attached.
struct DiagRecord {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double psi_gamma = 0.0;
  double rel_kinetic = 0.0;
  double rel_drift = 0.0;
  double h_e_rel = 0.0;
  double friction_diss = 0.0;
  double viscous_diss = 0.0;
};

struct Trajectory {
  Params params;
  std::vector<State> snapshots;
  std::vector<DiagRecord> records;
  double dt_max = 0.0;  // largest solver step taken
  double dt_min = 0.0;
};

struct SolverError : std::runtime_error {
  double time;
  SolverError(const std::string& msg, double t) : std::runtime_error(msg), time(t) {}
};
struct PositivityError : SolverError {
  using SolverError::SolverError;
};
struct CflError : SolverError {
  using SolverError::SolverError;
};
struct NonFiniteError : SolverError {
  using SolverError::SolverError;
};
struct StepLimitError : SolverError {
  using SolverError::SolverError;
};
struct UnderResolvedError : SolverError {
  using SolverError::SolverError;
};

/// v = (d/dx mu(rho)) / rho, derivative spectral, division pointwise.
Field drift_velocity(const Field& rho, const Params& p);

/// L2 distance between the two equivalent forms of the drift velocity,
/// v and sqrt(k(rho)/rho) * d rho/dx.
double drift_velocity_form_residual(const Field& rho, const Params& p);

/// s1 = (mu(rho) + lambda(rho)/2) * dv/dx.
Field stress_s1(const Field& rho, const Field& v, const Params& p);
/// s2 = (mu(rho) + lambda(rho)/2) * du/dx.
Field stress_s2(const Field& rho, const Field& u, const Params& p);
/// t_nu = nu * (2 mu_L(rho) + lambda_L(rho)) * du/dx.
Field stress_tnu(const Field& rho, const Field& u, const Params& p);

/// L2 norm of the mismatch between the two spectral assemblies of the
/// capillarity-viscosity exchange:
///   d/dx(mu dv/dx) + (1/2) d/dx(lambda dv/dx)
///   vs rho d/dx(k d2rho/dx2 + (1/2) k' (drho/dx)^2),
/// with v the drift velocity. Zero in exact arithmetic.
double bohm_residual(const Field& rho, const Params& p);

struct Rhs {
  Field d_rho;
  Field d_m;
  Field d_J;
};

/// Non-stiff right-hand side of the scaled system (friction excluded); every
/// pointwise nonlinear product is dealiased before differentiation.
Rhs rhs_scaled(const State& state, const Params& p);

enum class StepPolicy { EnforceCfl, TrustDt };

/// Strang step: exact friction half-step, one SSP-RK3 transport step, exact
/// friction half-step. EnforceCfl rejects dt above cfl_dt(); TrustDt is for
/// callers that know the right-hand side vanishes (constant states) or that
/// drive dt themselves.
void step(State& state, double dt, const Params& p,
          StepPolicy policy = StepPolicy::EnforceCfl, double cfl_number = 0.3);

/// Multiplies momentum by exp(-dt/epsilon^2); exact for any dt.
void friction_decay(State& state, double dt, const Params& p);

/// Stable step size: cfl * epsilon * min over the advective, dispersive and
/// viscous limits, evaluated at the dealias cutoff wavenumber.
double cfl_dt(const State& state, const Params& p, double cfl_number = 0.3);

struct SimulateOptions {
  double sample_every = 2.5e-3;  // must divide t_end
  double dt_fixed = 0.0;         // 0 = adaptive from cfl_dt
  double cfl_number = 0.3;
  long long max_steps = 200000000;
  bool keep_snapshots = true;
  /// Reference lifts aligned with the sample schedule (size = samples+1);
  /// enables the relative-entropy diagnostics.
  const std::vector<StrongLift>* lifts = nullptr;
};

/// Integrates to t_end, sampling diagnostics (and optionally snapshots) on the
/// uniform schedule k * sample_every. Aborts with a SolverError subtype on
/// positivity loss, non-finite values, or step-budget exhaustion.
Trajectory simulate(const State& init, double t_end, const Params& p,
                    const SimulateOptions& opt);

/// L2 norm of J - d/dx mu(rho); the augmented-variable compatibility monitor.
double drift_constraint_residual(const State& state, const Params& p);

}  // namespace nsk
