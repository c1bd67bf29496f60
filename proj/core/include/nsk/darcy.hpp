/// @file darcy.hpp
/// @brief The friction-dominated (Darcy) limit: a fourth-order gradient flow
///        for the density, the strong-solution lift back into the scaled
///        system's variables, and the residual that lift leaves in the
///        momentum equation.

#pragma once

#include <vector>

#include "nsk/dynamics.hpp"

namespace nsk {

/// Darcy flux F = -dp/dx + d s1/dx evaluated on a density profile; the lifted
/// momentum is epsilon * F.
Field darcy_flux(const Field& rho_bar, const Params& p);

/// Right-hand side of the limit equation d rho/dt = -dF/dx.
Field gf_rhs(const Field& rho_bar, const Params& p);

struct GfTrajectory {
  Params params;
  std::vector<double> times;
  std::vector<Field> rho;
};

struct GfOptions {
  double sample_every = 2.5e-3;  // must divide t_end
  double dt_fixed = 0.0;         // 0 = adaptive
  double cfl_number = 0.3;
  long long max_steps = 200000000;
  double tail_tol = 1e-10;  // spectral-tail abort threshold at samples
};

/// Integrates the gradient flow with an integrating-factor classical RK4: the
/// stiff constant-coefficient fourth-order majorant exp(-alpha kappa^4 t),
/// alpha = max k(rho) rho, is applied exactly and only the bounded remainder
/// is stepped explicitly, so dt is set by the second-order pressure term
/// rather than kappa^4. Mass is conserved exactly (the mean mode is untouched).
/// Aborts on positivity loss, non-finite values, spectral-tail growth past
/// tail_tol, or step-budget exhaustion.
GfTrajectory solve_gradient_flow(const Field& rho0, double t_end, const Params& p,
                                 const GfOptions& opt);

/// Momentum-equation residual of the lifted solution:
///   e_bar = (1/eps) d/dx (m_bar^2/rho_bar) + d m_bar/dt,
/// with the time derivative expanded through the limit equation, so the
/// result is exactly linear in epsilon for a fixed profile.
Field error_term(const Field& rho_bar, const Params& p);

/// Lift of one density snapshot: m_bar = eps F, J_bar = d mu(rho_bar)/dx,
/// u_bar = m_bar/rho_bar, v_bar = J_bar/rho_bar, e = error_term.
StrongLift lift_strong(const Field& rho_bar, double time, const Params& p);

std::vector<StrongLift> lift_trajectory(const GfTrajectory& traj, const Params& p);

/// Well-prepared initial data for the scaled system: the lifted state itself,
/// so every relative-entropy part starts at exactly zero.
State well_prepared_state(const StrongLift& ref);

}  // namespace nsk
