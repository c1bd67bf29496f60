#include "nsk/darcy.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>

#include "pow_util.hpp"

namespace nsk {

using detail::pow_fast;

namespace {

// Pointwise pieces shared by the flux, the limit equation and the error term.
struct Profile {
  std::vector<double> p;      // pressure
  std::vector<double> mu;     // capillarity-matched viscosity
  std::vector<double> coeff;  // mu + lambda/2
  std::vector<double> v;      // drift velocity d(mu)/dx / rho
  std::vector<double> dv;     // d v/dx (dealiased v)
  std::vector<double> s1;     // coeff * dv, dealiased
};

Profile make_profile(const Field& rho, const Params& P) {
  const Grid& g = *rho.grid;
  const int n = g.n();
  const double a = (P.s + 3.0) / 2.0;
  const bool bump_on = P.bump.amplitude > 0.0;
  Profile pr;
  pr.p.resize(n);
  pr.mu.resize(n);
  pr.coeff.resize(n);
  pr.v.resize(n);
  pr.dv.resize(n);
  pr.s1.resize(n);
  for (int j = 0; j < n; ++j) {
    const double r = rho.v[j];
    pr.p[j] = pow_fast(r, P.gamma);
    if (bump_on) pr.p[j] += r * bump_e(r, P.bump, 1) - bump_e(r, P.bump, 0);
    pr.mu[j] = pow_fast(r, a);
    pr.coeff[j] = pr.mu[j] * (P.s + 3.0) / 2.0;  // mu + lambda/2
  }
  g.deriv_into(pr.mu.data(), pr.v.data(), 1, false);
  for (int j = 0; j < n; ++j) pr.v[j] /= rho.v[j];
  g.deriv_into(pr.v.data(), pr.dv.data(), 1, true);
  std::vector<double> prod(n);
  for (int j = 0; j < n; ++j) prod[j] = pr.coeff[j] * pr.dv[j];
  g.dealias_into(prod.data(), pr.s1.data());
  return pr;
}

void flux_into(const Grid& g, const Field& rho, const Params& P, const Profile& pr,
               double* out) {
  const int n = g.n();
  std::vector<double> dp(n), ds1(n);
  g.deriv_into(pr.p.data(), dp.data(), 1, true);
  g.deriv_into(pr.s1.data(), ds1.data(), 1, false);  // s1 already dealiased
  for (int j = 0; j < n; ++j) out[j] = -dp[j] + ds1[j];
}

}  // namespace

Field darcy_flux(const Field& rho_bar, const Params& p) {
  const Grid& g = *rho_bar.grid;
  const Profile pr = make_profile(rho_bar, p);
  Field out = g.make_field();
  flux_into(g, rho_bar, p, pr, out.v.data());
  return out;
}

Field gf_rhs(const Field& rho_bar, const Params& p) {
  const Grid& g = *rho_bar.grid;
  Field flux = darcy_flux(rho_bar, p);
  Field out = g.make_field();
  g.deriv_into(flux.v.data(), out.v.data(), 1, false);
  for (double& x : out.v) x = -x;
  return out;
}

Field error_term(const Field& rho_bar, const Params& p) {
  const Grid& g = *rho_bar.grid;
  const int n = g.n();
  const Profile pr = make_profile(rho_bar, p);

  Field flux = g.make_field();
  flux_into(g, rho_bar, p, pr, flux.v.data());
  Field rate = g.make_field();  // d rho_bar/dt through the limit equation
  g.deriv_into(flux.v.data(), rate.v.data(), 1, false);
  for (double& x : rate.v) x = -x;

  // Convective part: d/dx (m_bar^2 / rho_bar) = eps^2 d/dx (F^2 / rho_bar).
  std::vector<double> work(n), dwork(n);
  for (int j = 0; j < n; ++j)
    work[j] = flux.v[j] * flux.v[j] / rho_bar.v[j];
  g.deriv_into(work.data(), dwork.data(), 1, true);
  Field e = g.make_field();
  for (int j = 0; j < n; ++j) e.v[j] = p.epsilon * dwork[j];

  // dF/dt = -d/dx(p'(rho) rate) + d/dx(ds1/dt), expanded by the chain rule.
  std::vector<double> term(n), dterm(n);
  for (int j = 0; j < n; ++j)
    term[j] = pressure(rho_bar.v[j], p, 1) * rate.v[j];
  g.deriv_into(term.data(), dterm.data(), 1, true);
  for (int j = 0; j < n; ++j) e.v[j] -= p.epsilon * dterm[j];

  //   d v/dt = (d/dx(mu' rate) - v rate) / rho
  const double a = (p.s + 3.0) / 2.0;
  std::vector<double> vt(n);
  for (int j = 0; j < n; ++j)
    term[j] = a * pow_fast(rho_bar.v[j], a - 1.0) * rate.v[j];
  g.deriv_into(term.data(), dterm.data(), 1, true);
  for (int j = 0; j < n; ++j)
    vt[j] = (dterm[j] - pr.v[j] * rate.v[j]) / rho_bar.v[j];
  //   d s1/dt = coeff' rate dv + coeff d(vt)/dx
  std::vector<double> dvt(n);
  g.deriv_into(vt.data(), dvt.data(), 1, true);
  const double half_sp3 = (p.s + 3.0) / 2.0;
  for (int j = 0; j < n; ++j) {
    const double coeff_prime =
        half_sp3 * a * pow_fast(rho_bar.v[j], a - 1.0);  // (mu + lambda/2)'
    term[j] = coeff_prime * rate.v[j] * pr.dv[j] + pr.coeff[j] * dvt[j];
  }
  g.deriv_into(term.data(), dterm.data(), 1, true);
  for (int j = 0; j < n; ++j) e.v[j] += p.epsilon * dterm[j];
  return e;
}

StrongLift lift_strong(const Field& rho_bar, double time, const Params& p) {
  const Grid& g = *rho_bar.grid;
  const int n = g.n();
  StrongLift ref;
  ref.time = time;
  ref.rho = rho_bar;
  ref.m = darcy_flux(rho_bar, p);
  for (double& x : ref.m.v) x *= p.epsilon;
  Field mu = g.make_field();
  const double a = (p.s + 3.0) / 2.0;
  for (int j = 0; j < n; ++j) mu.v[j] = pow_fast(rho_bar.v[j], a);
  ref.J = g.deriv(mu, 1);
  ref.u = g.make_field();
  ref.v = g.make_field();
  for (int j = 0; j < n; ++j) {
    ref.u.v[j] = ref.m.v[j] / rho_bar.v[j];
    ref.v.v[j] = ref.J.v[j] / rho_bar.v[j];
  }
  ref.e = error_term(rho_bar, p);
  return ref;
}

std::vector<StrongLift> lift_trajectory(const GfTrajectory& traj, const Params& p) {
  std::vector<StrongLift> refs;
  refs.reserve(traj.rho.size());
  for (std::size_t k = 0; k < traj.rho.size(); ++k)
    refs.push_back(lift_strong(traj.rho[k], traj.times[k], p));
  return refs;
}

State well_prepared_state(const StrongLift& ref) {
  State st;
  st.time = ref.time;
  st.rho = ref.rho;
  st.m = ref.m;
  st.J = ref.J;
  return st;
}

namespace {

// Stable explicit step for the integrating-factor remainder: the second-order
// pressure term, the cross term from spatial variation of k rho, and whatever
// part of the fourth-order coefficient the majorant alpha does not absorb.
double gf_stable_dt(const Field& rho, const Params& P, double alpha,
                    double cfl_number) {
  const Grid& g = *rho.grid;
  const int n = g.n();
  const double kc = g.wavenumber(g.dealias_cutoff());
  double pmax = 0.0, krho_min = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    pmax = std::max(pmax, std::abs(pressure(rho.v[j], P, 1)));
    krho_min = std::min(krho_min, capillarity_k(rho.v[j], P, 0) * rho.v[j]);
  }
  Field krho = g.make_field();
  for (int j = 0; j < n; ++j)
    krho.v[j] = capillarity_k(rho.v[j], P, 0) * rho.v[j];
  const double dk = linf_norm(g.deriv(krho, 1));
  const double denom = kc * kc * pmax + kc * kc * kc * dk +
                       kc * kc * kc * kc * std::max(alpha - krho_min, 0.0) + 1e-300;
  return cfl_number / denom;
}

}  // namespace

GfTrajectory solve_gradient_flow(const Field& rho0, double t_end, const Params& p,
                                 const GfOptions& opt) {
  p.validate();
  if (!(t_end > 0.0))
    throw std::invalid_argument("solve_gradient_flow: t_end must be positive");
  const double k_real = t_end / opt.sample_every;
  const long long n_samples = std::llround(k_real);
  if (n_samples < 1 || std::abs(k_real - static_cast<double>(n_samples)) > 1e-9)
    throw std::invalid_argument("solve_gradient_flow: sample_every must divide t_end");

  const Grid& g = *rho0.grid;
  const int n = g.n();
  const int nc = n / 2 + 1;

  GfTrajectory traj;
  traj.params = p;
  traj.times.reserve(n_samples + 1);
  traj.rho.reserve(n_samples + 1);

  Field rho = rho0;
  double t = 0.0;

  auto check_health = [&](const Field& f) {
    const double mn = min_value(f);
    if (!std::isfinite(mn) || !std::isfinite(max_value(f)))
      throw NonFiniteError("gradient flow left the finite range", t);
    if (mn < p.rho_floor) {
      char msg[128];
      std::snprintf(msg, sizeof msg, "gradient-flow density %.6e below floor %.6e", mn,
                    p.rho_floor);
      throw PositivityError(msg, t);
    }
    const double tail = g.spectral_tail_ratio(f);
    if (tail > opt.tail_tol) {
      char msg[128];
      std::snprintf(msg, sizeof msg, "gradient flow under-resolved: tail ratio %.3e",
                    tail);
      throw UnderResolvedError(msg, t);
    }
  };

  check_health(rho);
  traj.times.push_back(0.0);
  traj.rho.push_back(rho);

  // Spectral scratch for the integrating-factor RK4.
  std::vector<std::complex<double>> spec0(nc), sa(nc), sb(nc), sc_(nc), sd(nc),
      stage(nc);
  std::vector<double> stage_real(n);

  auto remainder_spectrum = [&](const Field& f, double alpha,
                                std::vector<std::complex<double>>& out) {
    // N = gf_rhs + alpha d^4/dx^4, dealiased so high modes see pure decay.
    Field r = gf_rhs(f, p);
    g.fwd(r.v.data(), out.data());
    std::vector<std::complex<double>> fs(nc);
    g.fwd(f.v.data(), fs.data());
    for (int l = 0; l < nc; ++l) {
      const double k4 = std::pow(g.wavenumber(l), 4);
      out[l] += alpha * k4 * fs[l];
    }
    g.apply_dealias(out.data());
    // gf_rhs is a pure divergence, so the true mean of N is zero; the FFT
    // round trip leaves ~1 ulp there and it would integrate into mass drift.
    out[0] = 0.0;
  };

  long long steps = 0;
  for (long long k = 1; k <= n_samples; ++k) {
    const double t_target = opt.sample_every * static_cast<double>(k);
    while (t < t_target - 1e-13 * t_end) {
      double alpha = 0.0;
      for (int j = 0; j < n; ++j)
        alpha = std::max(alpha, capillarity_k(rho.v[j], p, 0) * rho.v[j]);
      double h = opt.dt_fixed > 0.0 ? opt.dt_fixed
                                    : gf_stable_dt(rho, p, alpha, opt.cfl_number);
      const double remain = t_target - t;
      if (h >= remain || remain - h < 1e-12 * opt.sample_every) h = remain;

      g.fwd(rho.v.data(), spec0.data());
      auto stage_field = [&](const std::vector<std::complex<double>>& s) {
        stage = s;
        g.inv_destroy(stage.data(), stage_real.data());
        Field f = g.make_field();
        f.v.assign(stage_real.begin(), stage_real.end());
        return f;
      };

      std::vector<double> e1(nc), e2(nc);
      for (int l = 0; l < nc; ++l) {
        const double k2 = g.wavenumber(l) * g.wavenumber(l);
        e1[l] = std::exp(-alpha * k2 * k2 * h / 2.0);
        e2[l] = e1[l] * e1[l];
      }

      remainder_spectrum(rho, alpha, sa);
      std::vector<std::complex<double>> ua(nc), ub(nc), uc(nc);
      for (int l = 0; l < nc; ++l) ua[l] = e1[l] * (spec0[l] + 0.5 * h * sa[l]);
      remainder_spectrum(stage_field(ua), alpha, sb);
      for (int l = 0; l < nc; ++l) ub[l] = e1[l] * spec0[l] + 0.5 * h * sb[l];
      remainder_spectrum(stage_field(ub), alpha, sc_);
      for (int l = 0; l < nc; ++l) uc[l] = e2[l] * spec0[l] + h * e1[l] * sc_[l];
      remainder_spectrum(stage_field(uc), alpha, sd);
      for (int l = 0; l < nc; ++l) {
        stage[l] = e2[l] * spec0[l] + (h / 6.0) * (e2[l] * sa[l] +
                                                   2.0 * e1[l] * (sb[l] + sc_[l]) +
                                                   sd[l]);
      }
      g.inv_destroy(stage.data(), rho.v.data());
      t += h;
      if (++steps > opt.max_steps)
        throw StepLimitError("gradient flow step budget exhausted", t);
    }
    t = t_target;
    check_health(rho);
    traj.times.push_back(t);
    traj.rho.push_back(rho);
  }
  return traj;
}

}  // namespace nsk
