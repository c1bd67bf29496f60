/// @file constitutive.hpp
/// @brief Pointwise closures for the compressible model: gamma-law pressure
///        with a compactly supported energy bump, capillarity coefficients
///        tied to a density-dependent viscosity, and the Bregman-relative
///        quantities consumed by the entropy diagnostics.

#pragma once

#include <optional>
#include <utility>

namespace nsk {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Smooth compactly supported energy perturbation
///   e(rho) = amplitude * exp(-1/(1-z^2)),  z = (rho-center)/halfwidth,
/// identically zero for |z| >= 1. All derivatives vanish at the support edge.
struct BumpSpec {
  double amplitude = 0.0;
  double center = 1.0;
  double halfwidth = 0.4;
};

enum class LameKind { BdMatched, Scaled };

/// Viscous Lame pair (mu_L, lambda_L). BdMatched ties the pair to the
/// capillarity-matched (mu, lambda); Scaled multiplies that pair by alpha.
struct LameMode {
  LameKind kind = LameKind::BdMatched;
  double alpha = 1.0;
};

/// Scaling of the drift-stress divergence in the auxiliary momentum equation.
enum class S2Scaling { InvEpsilon, Unit };

/// Which stability theory a parameter set must satisfy; narrows the legal
/// exponent range for s.
enum class StudyMode { Relaxation, WeakStrong };

struct Params {
  double gamma = 2.0;
  double s = -1.0;
  double epsilon = 0.1;
  double nu = 0.0;
  BumpSpec bump{};
  LameMode lame{};
  double rho_floor = 1e-3;
  double domain_length = 2.0 * kPi;
  S2Scaling s2_scaling = S2Scaling::InvEpsilon;
  bool friction = true;

  /// Mode-independent invariants: gamma > 1, s >= -1, epsilon > 0, nu >= 0,
  /// rho_floor > 0, halfwidth > 0, amplitude >= 0, alpha >= 0.
  void validate() const;
  /// Adds the mode's exponent ceiling: s <= gamma-2 (Relaxation) or
  /// s <= 2*gamma-3 plus nu > 0 (WeakStrong).
  void validate(StudyMode mode) const;
};

/// e and its derivatives, order in 0..3. Exactly zero outside the support.
double bump_e(double rho, const BumpSpec& bump, int order = 0);

/// h(rho) = rho^gamma/(gamma-1) + e(rho); order in 0..2. Requires rho > 0.
double enthalpy(double rho, const Params& p, int order = 0);

/// p(rho) = rho*h'(rho) - h(rho) = rho^gamma + rho*e'(rho) - e(rho);
/// order in 0..2. Requires rho > 0.
double pressure(double rho, const Params& p, int order = 0);

/// Decomposition p = p_gamma + p_e with p_gamma = rho^gamma.
struct PressureSplit {
  double p_gamma;
  double p_e;
};
PressureSplit pressure_split(double rho, const Params& p);

/// Scans p' on the bump support; returns the hull [a,b] of the sampled points
/// with p' < 0, std::nullopt when p' stays nonnegative. The negative set can
/// be disconnected (the bump's e'' has two off-center wells), so interior
/// points of [a,b] may still have p' > 0.
std::optional<std::pair<double, double>> check_nonmonotone(const Params& p,
                                                           int n_samples = 4096);

/// Smallest amplitude at which p' first touches zero somewhere on the bump
/// support (p' is affine in the amplitude). +infinity when no finite
/// amplitude creates a sign change. The bump amplitude in `p` is ignored.
double find_bump_threshold(const Params& p, int n_samples = 4096);

/// Capillarity coefficient k(rho) = ((s+3)^2/4) rho^s; order in 0..1.
double capillarity_k(double rho, const Params& p, int order = 0);

/// Capillarity-matched viscosity mu(rho) = rho^((s+3)/2); order in 0..2.
/// Satisfies mu'(rho)^2 = rho*k(rho).
double capillary_mu(double rho, const Params& p, int order = 0);

/// lambda(rho) = 2(mu'(rho)rho - mu(rho)) = (s+1) mu(rho).
double lame_lambda(double rho, const Params& p);

/// Viscous pair (mu_L, lambda_L) selected by LameMode.
struct ViscousPair {
  double mu;
  double lambda;
};
ViscousPair lame_viscous(double rho, const Params& p);

/// Bregman divergences of the two enthalpy parts:
///   h_gamma(rho|rho_bar) and h_e(rho|rho_bar).
struct RelEnthalpy {
  double h_gamma;
  double h_e;
  double total() const { return h_gamma + h_e; }
};
RelEnthalpy rel_enthalpy(double rho, double rho_bar, const Params& p);

/// p(rho|rho_bar) = p(rho) - p(rho_bar) - p'(rho_bar)(rho - rho_bar).
double rel_pressure(double rho, double rho_bar, const Params& p);

/// Residual of p(rho|rho_bar) = (gamma-1) h_gamma(rho|rho_bar) + p_e(rho|rho_bar),
/// which is exact in exact arithmetic.
double rel_pressure_identity_residual(double rho, double rho_bar, const Params& p);

}  // namespace nsk
