#include "nsk/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nsk {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_positive_density(double rho) {
  if (!(rho > 0.0)) throw std::domain_error("constitutive law evaluated at rho <= 0");
}

}  // namespace

void Params::validate() const {
  require(gamma > 1.0, "Params: gamma must exceed 1");
  require(s >= -1.0, "Params: s must be >= -1");
  require(epsilon > 0.0, "Params: epsilon must be positive");
  require(nu >= 0.0, "Params: nu must be nonnegative");
  require(rho_floor > 0.0, "Params: rho_floor must be positive");
  require(domain_length > 0.0, "Params: domain_length must be positive");
  require(bump.halfwidth > 0.0, "Params: bump halfwidth must be positive");
  require(bump.amplitude >= 0.0, "Params: bump amplitude must be nonnegative");
  if (lame.kind == LameKind::Scaled)
    require(lame.alpha >= 0.0, "Params: Lame scale alpha must be nonnegative");
}

void Params::validate(StudyMode mode) const {
  validate();
  if (mode == StudyMode::Relaxation) {
    require(s <= gamma - 2.0, "Params: relaxation theory needs s <= gamma-2");
  } else {
    require(s <= 2.0 * gamma - 3.0, "Params: weak-strong theory needs s <= 2*gamma-3");
    require(nu > 0.0, "Params: weak-strong theory needs nu > 0");
  }
}

double bump_e(double rho, const BumpSpec& bump, int order) {
  if (order < 0 || order > 3) throw std::invalid_argument("bump_e: order in 0..3");
  const double z = (rho - bump.center) / bump.halfwidth;
  const double d = 1.0 - z * z;
  // exp(-1/d) underflows long before 1/d^4 can overflow; below this cut the
  // true value is < exp(-1e8) and the powers of 1/d are not yet dangerous.
  if (d <= 1e-8) return 0.0;
  const double u = 1.0 / d;
  const double f = bump.amplitude * std::exp(-u);
  if (order == 0) return f;
  const double p1 = -2.0 * z * u * u;  // phi'
  if (order == 1) return f * p1 / bump.halfwidth;
  const double p2 = -2.0 * u * u - 8.0 * z * z * u * u * u;  // phi''
  if (order == 2) return f * (p2 + p1 * p1) / (bump.halfwidth * bump.halfwidth);
  const double p3 = -24.0 * z * u * u * u - 48.0 * z * z * z * u * u * u * u;  // phi'''
  return f * (p3 + 3.0 * p1 * p2 + p1 * p1 * p1) /
         (bump.halfwidth * bump.halfwidth * bump.halfwidth);
}

double enthalpy(double rho, const Params& p, int order) {
  require_positive_density(rho);
  const double g = p.gamma;
  switch (order) {
    case 0: return std::pow(rho, g) / (g - 1.0) + bump_e(rho, p.bump, 0);
    case 1: return g * std::pow(rho, g - 1.0) / (g - 1.0) + bump_e(rho, p.bump, 1);
    case 2: return g * std::pow(rho, g - 2.0) + bump_e(rho, p.bump, 2);
    default: throw std::invalid_argument("enthalpy: order in 0..2");
  }
}

double pressure(double rho, const Params& p, int order) {
  require_positive_density(rho);
  const double g = p.gamma;
  switch (order) {
    case 0:
      return std::pow(rho, g) + rho * bump_e(rho, p.bump, 1) - bump_e(rho, p.bump, 0);
    case 1:
      return g * std::pow(rho, g - 1.0) + rho * bump_e(rho, p.bump, 2);
    case 2:
      return g * (g - 1.0) * std::pow(rho, g - 2.0) + bump_e(rho, p.bump, 2) +
             rho * bump_e(rho, p.bump, 3);
    default: throw std::invalid_argument("pressure: order in 0..2");
  }
}

PressureSplit pressure_split(double rho, const Params& p) {
  require_positive_density(rho);
  return {std::pow(rho, p.gamma),
          rho * bump_e(rho, p.bump, 1) - bump_e(rho, p.bump, 0)};
}

std::optional<std::pair<double, double>> check_nonmonotone(const Params& p,
                                                           int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("check_nonmonotone: n_samples >= 2");
  // p' >= gamma rho^(gamma-1) > 0 away from the bump support, so scanning the
  // support suffices.
  const double lo = std::max(p.bump.center - p.bump.halfwidth, 1e-12);
  const double hi = p.bump.center + p.bump.halfwidth;
  if (!(hi > lo)) return std::nullopt;
  double first = std::numeric_limits<double>::quiet_NaN();
  double last = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < n_samples; ++i) {
    const double rho = lo + (hi - lo) * (static_cast<double>(i) / (n_samples - 1));
    if (pressure(rho, p, 1) < 0.0) {
      if (std::isnan(first)) first = rho;
      last = rho;
    }
  }
  if (std::isnan(first)) return std::nullopt;
  return std::make_pair(first, last);
}

double find_bump_threshold(const Params& p, int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("find_bump_threshold: n_samples >= 2");
  // p'(rho; A) = gamma rho^(gamma-1) + A rho q(rho) with q the unit-amplitude
  // e''; affine in A, so the touching amplitude is a direct minimization.
  BumpSpec unit = p.bump;
  unit.amplitude = 1.0;
  const double lo = std::max(p.bump.center - p.bump.halfwidth, 1e-12);
  const double hi = p.bump.center + p.bump.halfwidth;
  double a_star = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    const double rho = lo + (hi - lo) * (static_cast<double>(i) / (n_samples - 1));
    const double q = bump_e(rho, unit, 2);
    if (q < 0.0) {
      const double g = p.gamma * std::pow(rho, p.gamma - 1.0);
      a_star = std::min(a_star, g / (-rho * q));
    }
  }
  return a_star;
}

double capillarity_k(double rho, const Params& p, int order) {
  require_positive_density(rho);
  const double c = (p.s + 3.0) * (p.s + 3.0) / 4.0;
  switch (order) {
    case 0: return c * std::pow(rho, p.s);
    case 1: return c * p.s * std::pow(rho, p.s - 1.0);
    default: throw std::invalid_argument("capillarity_k: order in 0..1");
  }
}

double capillary_mu(double rho, const Params& p, int order) {
  require_positive_density(rho);
  const double a = (p.s + 3.0) / 2.0;
  switch (order) {
    case 0: return std::pow(rho, a);
    case 1: return a * std::pow(rho, a - 1.0);
    case 2: return a * (a - 1.0) * std::pow(rho, a - 2.0);
    default: throw std::invalid_argument("capillary_mu: order in 0..2");
  }
}

double lame_lambda(double rho, const Params& p) {
  return (p.s + 1.0) * capillary_mu(rho, p, 0);
}

ViscousPair lame_viscous(double rho, const Params& p) {
  const double mu = capillary_mu(rho, p, 0);
  const double lambda = lame_lambda(rho, p);
  if (p.lame.kind == LameKind::BdMatched) return {mu, lambda};
  return {p.lame.alpha * mu, p.lame.alpha * lambda};
}

RelEnthalpy rel_enthalpy(double rho, double rho_bar, const Params& p) {
  require_positive_density(rho);
  require_positive_density(rho_bar);
  const double g = p.gamma;
  const double hg = (std::pow(rho, g) - std::pow(rho_bar, g) -
                     g * std::pow(rho_bar, g - 1.0) * (rho - rho_bar)) /
                    (g - 1.0);
  const double he = bump_e(rho, p.bump, 0) - bump_e(rho_bar, p.bump, 0) -
                    bump_e(rho_bar, p.bump, 1) * (rho - rho_bar);
  return {hg, he};
}

double rel_pressure(double rho, double rho_bar, const Params& p) {
  return pressure(rho, p, 0) - pressure(rho_bar, p, 0) -
         pressure(rho_bar, p, 1) * (rho - rho_bar);
}

double rel_pressure_identity_residual(double rho, double rho_bar, const Params& p) {
  const RelEnthalpy rel = rel_enthalpy(rho, rho_bar, p);
  // Bregman divergence of p_e(rho) = rho e'(rho) - e(rho); (p_e)' = rho e''.
  const double pe_rel = (rho * bump_e(rho, p.bump, 1) - bump_e(rho, p.bump, 0)) -
                        (rho_bar * bump_e(rho_bar, p.bump, 1) - bump_e(rho_bar, p.bump, 0)) -
                        rho_bar * bump_e(rho_bar, p.bump, 2) * (rho - rho_bar);
  return rel_pressure(rho, rho_bar, p) - ((p.gamma - 1.0) * rel.h_gamma + pe_rel);
}

}  // namespace nsk
