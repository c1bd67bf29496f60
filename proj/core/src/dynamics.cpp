#include "nsk/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "nsk/entropy.hpp"
#include "pow_util.hpp"

namespace nsk {

using detail::pow_fast;

namespace {

// Scratch for one right-hand-side assembly; reused across stages and steps.
struct Workspace {
  explicit Workspace(int n)
      : u(n), du(n), mu(n), coeff(n), prod(n), dflux(n), accum_m(n), v(n), dv(n) {}
  std::vector<double> u, du, mu, coeff, prod, dflux, accum_m, v, dv;
};

// d_rho, d_m, d_J get the non-stiff right-hand side; rho/m/J are node values.
void assemble_rhs(const Grid& g, const Params& P, const double* rho, const double* m,
                  const double* J, double* d_rho, double* d_m, double* d_J,
                  Workspace& ws, double time_for_errors) {
  const int n = g.n();
  const double inv_eps = 1.0 / P.epsilon;
  const double a = (P.s + 3.0) / 2.0;  // mu = rho^a
  const bool bump_on = P.bump.amplitude > 0.0;

  double rho_min = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) rho_min = std::min(rho_min, rho[j]);
  if (!(rho_min > 0.0))
    throw PositivityError("density lost positivity inside a stage", time_for_errors);

  // u and the capillarity-matched coefficient mu + lambda/2.
  for (int j = 0; j < n; ++j) {
    ws.u[j] = m[j] / rho[j];
    const double mu = pow_fast(rho[j], a);
    ws.mu[j] = mu;
    ws.coeff[j] = mu + 0.5 * (P.s + 1.0) * mu;
  }
  g.deriv_into(ws.u.data(), ws.du.data(), 1, true);

  // Continuity: d_rho = -(1/eps) dm/dx (m is prognostic, no product).
  g.deriv_into(m, d_rho, 1, false);
  for (int j = 0; j < n; ++j) d_rho[j] *= -inv_eps;

  // Momentum, assembled into accum_m term by term.
  //   convection d/dx(m u)
  for (int j = 0; j < n; ++j) ws.prod[j] = m[j] * ws.u[j];
  g.deriv_into(ws.prod.data(), ws.dflux.data(), 1, true);
  for (int j = 0; j < n; ++j) ws.accum_m[j] = -ws.dflux[j];
  //   pressure gradient
  if (bump_on) {
    for (int j = 0; j < n; ++j)
      ws.prod[j] = pow_fast(rho[j], P.gamma) + rho[j] * bump_e(rho[j], P.bump, 1) -
                   bump_e(rho[j], P.bump, 0);
  } else {
    for (int j = 0; j < n; ++j) ws.prod[j] = pow_fast(rho[j], P.gamma);
  }
  g.deriv_into(ws.prod.data(), ws.dflux.data(), 1, true);
  for (int j = 0; j < n; ++j) ws.accum_m[j] -= ws.dflux[j];
  //   drift stress s1 = (mu + lambda/2) dv/dx, v = (d mu/dx)/rho
  g.deriv_into(ws.mu.data(), ws.v.data(), 1, false);
  for (int j = 0; j < n; ++j) ws.v[j] /= rho[j];
  g.deriv_into(ws.v.data(), ws.dv.data(), 1, true);
  for (int j = 0; j < n; ++j) ws.prod[j] = ws.coeff[j] * ws.dv[j];
  g.deriv_into(ws.prod.data(), ws.dflux.data(), 1, true);
  for (int j = 0; j < n; ++j) ws.accum_m[j] += ws.dflux[j];
  //   Navier-Stokes stress t_nu = nu (2 mu_L + lambda_L) du/dx
  if (P.nu > 0.0) {
    const double fac =
        (P.lame.kind == LameKind::BdMatched ? 1.0 : P.lame.alpha) * (P.s + 3.0);
    for (int j = 0; j < n; ++j) ws.prod[j] = P.nu * fac * ws.mu[j] * ws.du[j];
    g.deriv_into(ws.prod.data(), ws.dflux.data(), 1, true);
    for (int j = 0; j < n; ++j) ws.accum_m[j] += ws.dflux[j];
  }
  for (int j = 0; j < n; ++j) d_m[j] = inv_eps * ws.accum_m[j];

  // Auxiliary momentum: convection plus the drift stress s2 = coeff du/dx.
  for (int j = 0; j < n; ++j) ws.prod[j] = J[j] * ws.u[j];
  g.deriv_into(ws.prod.data(), ws.dflux.data(), 1, true);
  for (int j = 0; j < n; ++j) d_J[j] = -inv_eps * ws.dflux[j];
  const double c2 = P.s2_scaling == S2Scaling::InvEpsilon ? inv_eps : 1.0;
  for (int j = 0; j < n; ++j) ws.prod[j] = ws.coeff[j] * ws.du[j];
  g.deriv_into(ws.prod.data(), ws.dflux.data(), 1, true);
  for (int j = 0; j < n; ++j) d_J[j] -= c2 * ws.dflux[j];
}

double kahan_mean(const double* x, int n) {
  double sum = 0.0, comp = 0.0;
  for (int j = 0; j < n; ++j) {
    const double y = x[j] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum / n;
}

void check_state_health(const State& st, const Params& P) {
  const double mn = min_value(st.rho);
  if (!std::isfinite(mn) || !std::isfinite(linf_norm(st.m)) ||
      !std::isfinite(linf_norm(st.J))) {
    throw NonFiniteError("state left the finite range", st.time);
  }
  if (mn < P.rho_floor) {
    char msg[128];
    std::snprintf(msg, sizeof msg, "density %.6e fell below the floor %.6e", mn,
                  P.rho_floor);
    throw PositivityError(msg, st.time);
  }
}

struct StepScratch {
  StepScratch(int n)
      : ws(n), r0(n), m0(n), J0(n), r1(n), m1(n), J1(n), kr(n), km(n), kJ(n) {}
  Workspace ws;
  std::vector<double> r0, m0, J0, r1, m1, J1, kr, km, kJ;
};

void ssp_rk3(State& st, double dt, const Params& P, StepScratch& sc) {
  const Grid& g = *st.rho.grid;
  const int n = g.n();
  double* rho = st.rho.v.data();
  double* m = st.m.v.data();
  double* J = st.J.v.data();
  sc.r0.assign(rho, rho + n);
  sc.m0.assign(m, m + n);
  sc.J0.assign(J, J + n);

  // u1 = u0 + dt F(u0)
  assemble_rhs(g, P, rho, m, J, sc.kr.data(), sc.km.data(), sc.kJ.data(), sc.ws,
               st.time);
  for (int j = 0; j < n; ++j) {
    sc.r1[j] = sc.r0[j] + dt * sc.kr[j];
    sc.m1[j] = sc.m0[j] + dt * sc.km[j];
    sc.J1[j] = sc.J0[j] + dt * sc.kJ[j];
  }
  // u2 = 3/4 u0 + 1/4 (u1 + dt F(u1))
  assemble_rhs(g, P, sc.r1.data(), sc.m1.data(), sc.J1.data(), sc.kr.data(),
               sc.km.data(), sc.kJ.data(), sc.ws, st.time);
  for (int j = 0; j < n; ++j) {
    sc.r1[j] = 0.75 * sc.r0[j] + 0.25 * (sc.r1[j] + dt * sc.kr[j]);
    sc.m1[j] = 0.75 * sc.m0[j] + 0.25 * (sc.m1[j] + dt * sc.km[j]);
    sc.J1[j] = 0.75 * sc.J0[j] + 0.25 * (sc.J1[j] + dt * sc.kJ[j]);
  }
  // u^{n+1} = 1/3 u0 + 2/3 (u2 + dt F(u2))
  assemble_rhs(g, P, sc.r1.data(), sc.m1.data(), sc.J1.data(), sc.kr.data(),
               sc.km.data(), sc.kJ.data(), sc.ws, st.time);
  for (int j = 0; j < n; ++j) {
    rho[j] = sc.r0[j] / 3.0 + (2.0 / 3.0) * (sc.r1[j] + dt * sc.kr[j]);
    m[j] = sc.m0[j] / 3.0 + (2.0 / 3.0) * (sc.m1[j] + dt * sc.km[j]);
    J[j] = sc.J0[j] / 3.0 + (2.0 / 3.0) * (sc.J1[j] + dt * sc.kJ[j]);
  }

  // The transport substep moves pure divergences, so all three means are
  // invariant; the stage combinations only honor that to round-off, and the
  // per-step bias is systematic on smooth data. Restore the exact means so
  // the invariants hold over any number of steps.
  for (auto [x, x0] : {std::pair{rho, sc.r0.data()}, std::pair{m, sc.m0.data()},
                       std::pair{J, sc.J0.data()}}) {
    const double delta = kahan_mean(x0, n) - kahan_mean(x, n);
    for (int j = 0; j < n; ++j) x[j] += delta;
  }
}

struct KahanAcc {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

// Kinetic energy removed by m -> f m at frozen rho; equals the friction
// dissipation integral over the half-step exactly, since the decay is the
// exact flow of m' = -m / eps^2.
double friction_drop(const State& st, double f) {
  const Grid& g = *st.rho.grid;
  const int n = g.n();
  KahanAcc acc;
  for (int j = 0; j < n; ++j)
    acc.add(st.m.v[j] * st.m.v[j] / st.rho.v[j]);
  return 0.5 * (1.0 - f * f) * acc.sum * g.length() / n;
}

void strang_step(State& st, double dt, const Params& P, StepScratch& sc,
                 KahanAcc* fric_acc = nullptr) {
  if (P.friction) {
    const double f = std::exp(-0.5 * dt / (P.epsilon * P.epsilon));
    if (fric_acc) fric_acc->add(friction_drop(st, f));
    for (double& x : st.m.v) x *= f;
    ssp_rk3(st, dt, P, sc);
    if (fric_acc) fric_acc->add(friction_drop(st, f));
    for (double& x : st.m.v) x *= f;
  } else {
    ssp_rk3(st, dt, P, sc);
  }
  st.time += dt;
  check_state_health(st, P);
}

}  // namespace

Field drift_velocity(const Field& rho, const Params& p) {
  const Grid& g = *rho.grid;
  Field mu = g.make_field();
  for (int j = 0; j < g.n(); ++j) mu.v[j] = pow_fast(rho.v[j], (p.s + 3.0) / 2.0);
  Field v = g.make_field();
  g.deriv_into(mu.v.data(), v.v.data(), 1, false);
  for (int j = 0; j < g.n(); ++j) v.v[j] /= rho.v[j];
  return v;
}

double drift_velocity_form_residual(const Field& rho, const Params& p) {
  const Grid& g = *rho.grid;
  const Field v = drift_velocity(rho, p);
  Field alt = g.deriv(rho, 1);
  for (int j = 0; j < g.n(); ++j) {
    alt.v[j] *= std::sqrt(capillarity_k(rho.v[j], p, 0) / rho.v[j]);
  }
  for (int j = 0; j < g.n(); ++j) alt.v[j] -= v.v[j];
  return l2_norm(alt);
}

namespace {

Field stress_common(const Field& rho, const Field& w, const Params& p, bool viscous) {
  const Grid& g = *rho.grid;
  Field dw = g.deriv(w, 1);
  Field out = g.make_field();
  for (int j = 0; j < g.n(); ++j) {
    double c;
    if (viscous) {
      const ViscousPair vp = lame_viscous(rho.v[j], p);
      c = p.nu * (2.0 * vp.mu + vp.lambda);
    } else {
      c = capillary_mu(rho.v[j], p, 0) + 0.5 * lame_lambda(rho.v[j], p);
    }
    out.v[j] = c * dw.v[j];
  }
  return out;
}

}  // namespace

Field stress_s1(const Field& rho, const Field& v, const Params& p) {
  return stress_common(rho, v, p, false);
}

Field stress_s2(const Field& rho, const Field& u, const Params& p) {
  return stress_common(rho, u, p, false);
}

Field stress_tnu(const Field& rho, const Field& u, const Params& p) {
  return stress_common(rho, u, p, true);
}

double bohm_residual(const Field& rho, const Params& p) {
  const Grid& g = *rho.grid;
  const int n = g.n();

  // Route 1 through the drift velocity.
  Field v = g.dealias(drift_velocity(rho, p));
  Field dv = g.deriv(v, 1);
  Field prod = g.make_field();
  for (int j = 0; j < n; ++j) {
    const double mu = capillary_mu(rho.v[j], p, 0);
    prod.v[j] = (mu + 0.5 * lame_lambda(rho.v[j], p)) * dv.v[j];
  }
  Field route1 = g.deriv(g.dealias(prod), 1);

  // Route 2 through the capillarity coefficient.
  Field drho = g.deriv(rho, 1);
  Field d2rho = g.deriv(rho, 2);
  Field w = g.make_field();
  for (int j = 0; j < n; ++j) {
    w.v[j] = capillarity_k(rho.v[j], p, 0) * d2rho.v[j] +
             0.5 * capillarity_k(rho.v[j], p, 1) * drho.v[j] * drho.v[j];
  }
  Field dw = g.deriv(g.dealias(w), 1);
  Field route2 = g.make_field();
  for (int j = 0; j < n; ++j) route2.v[j] = rho.v[j] * dw.v[j];
  route2 = g.dealias(route2);

  for (int j = 0; j < n; ++j) route1.v[j] -= route2.v[j];
  return l2_norm(route1);
}

Rhs rhs_scaled(const State& state, const Params& p) {
  const Grid& g = *state.rho.grid;
  Rhs out{g.make_field(), g.make_field(), g.make_field()};
  Workspace ws(g.n());
  assemble_rhs(g, p, state.rho.v.data(), state.m.v.data(), state.J.v.data(),
               out.d_rho.v.data(), out.d_m.v.data(), out.d_J.v.data(), ws, state.time);
  return out;
}

void friction_decay(State& state, double dt, const Params& p) {
  if (!p.friction) return;
  const double f = std::exp(-dt / (p.epsilon * p.epsilon));
  for (double& x : state.m.v) x *= f;
}

double cfl_dt(const State& state, const Params& p, double cfl_number) {
  const Grid& g = *state.rho.grid;
  const int n = g.n();
  const double kc = g.wavenumber(g.dealias_cutoff());
  double umax = 0.0, cmax2 = 0.0, mu_prime_max = 0.0, visc_max = 0.0;
  double rho_min = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    const double rho = state.rho.v[j];
    rho_min = std::min(rho_min, rho);
    umax = std::max(umax, std::abs(state.m.v[j] / rho));
    cmax2 = std::max(cmax2, std::max(pressure(rho, p, 1), 0.0));
    // sqrt(k rho) = mu'(rho)
    mu_prime_max = std::max(mu_prime_max, capillary_mu(rho, p, 1));
    if (p.nu > 0.0) {
      const ViscousPair vp = lame_viscous(rho, p);
      visc_max = std::max(visc_max, p.nu * (2.0 * vp.mu + vp.lambda));
    }
  }
  const double tiny = 1e-300;
  double dt = 1.0 / (kc * (umax + std::sqrt(cmax2)) + tiny);
  dt = std::min(dt, 1.0 / (kc * kc * mu_prime_max + tiny));
  if (p.nu > 0.0) dt = std::min(dt, rho_min / (visc_max * kc * kc + tiny));
  return cfl_number * p.epsilon * dt;
}

void step(State& state, double dt, const Params& p, StepPolicy policy,
          double cfl_number) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  if (policy == StepPolicy::EnforceCfl) {
    const double bound = cfl_dt(state, p, cfl_number);
    if (dt > bound * (1.0 + 1e-9)) {
      char msg[128];
      std::snprintf(msg, sizeof msg, "dt %.6e exceeds the stable bound %.6e", dt,
                    bound);
      throw CflError(msg, state.time);
    }
  }
  StepScratch sc(state.rho.grid->n());
  strang_step(state, dt, p, sc);
}

double drift_constraint_residual(const State& state, const Params& p) {
  const Grid& g = *state.rho.grid;
  Field mu = g.make_field();
  for (int j = 0; j < g.n(); ++j)
    mu.v[j] = capillary_mu(state.rho.v[j], p, 0);
  Field dmu = g.deriv(mu, 1);
  for (int j = 0; j < g.n(); ++j) dmu.v[j] = state.J.v[j] - dmu.v[j];
  return l2_norm(dmu);
}

namespace {

// (2 nu / eps) mu_L |du|^2 + (nu / eps) lambda_L |du|^2, integrated.
double viscous_rate(const State& st, const Params& P) {
  if (P.nu <= 0.0) return 0.0;
  const Grid& g = *st.rho.grid;
  const int n = g.n();
  Field u = g.make_field();
  for (int j = 0; j < n; ++j) u.v[j] = st.m.v[j] / st.rho.v[j];
  Field du = g.deriv(u, 1);
  Field integrand = g.make_field();
  for (int j = 0; j < n; ++j) {
    const ViscousPair vp = lame_viscous(st.rho.v[j], P);
    integrand.v[j] = (2.0 * vp.mu + vp.lambda) * du.v[j] * du.v[j];
  }
  return P.nu * g.integrate(integrand) / P.epsilon;
}

}  // namespace

Trajectory simulate(const State& init, double t_end, const Params& p,
                    const SimulateOptions& opt) {
  p.validate();
  if (!(t_end > 0.0)) throw std::invalid_argument("simulate: t_end must be positive");
  if (!(opt.sample_every > 0.0))
    throw std::invalid_argument("simulate: sample_every must be positive");
  const double k_real = t_end / opt.sample_every;
  const long long n_samples = std::llround(k_real);
  if (n_samples < 1 || std::abs(k_real - static_cast<double>(n_samples)) > 1e-9)
    throw std::invalid_argument("simulate: sample_every must divide t_end");
  if (opt.lifts && static_cast<long long>(opt.lifts->size()) != n_samples + 1)
    throw std::invalid_argument("simulate: lifts must match the sample schedule");

  State st = init;
  check_state_health(st, p);

  Trajectory traj;
  traj.params = p;
  traj.records.reserve(n_samples + 1);
  if (opt.keep_snapshots) traj.snapshots.reserve(n_samples + 1);

  StepScratch sc(st.rho.grid->n());
  KahanAcc acc_friction, acc_viscous;
  double prev_visc_rate = viscous_rate(st, p);

  auto record_sample = [&](long long k) {
    DiagRecord rec;
    rec.t = st.time;
    rec.mass = st.rho.grid->integrate(st.rho);
    rec.energy = entropy_total(st, p);
    rec.friction_diss = acc_friction.sum;
    rec.viscous_diss = acc_viscous.sum;
    if (opt.lifts) {
      const RelativeEntropy re = relative_entropy(st, (*opt.lifts)[k], p);
      rec.psi_gamma = re.psi_gamma;
      rec.rel_kinetic = re.rel_kinetic;
      rec.rel_drift = re.rel_drift;
      rec.h_e_rel = re.h_e;
    }
    traj.records.push_back(rec);
    if (opt.keep_snapshots) traj.snapshots.push_back(st);
  };

  record_sample(0);

  long long steps = 0;
  const double t0 = st.time;
  for (long long k = 1; k <= n_samples; ++k) {
    const double t_target = t0 + opt.sample_every * static_cast<double>(k);
    while (st.time < t_target - 1e-13 * t_end) {
      double dt = opt.dt_fixed > 0.0 ? opt.dt_fixed : cfl_dt(st, p, opt.cfl_number);
      const double remain = t_target - st.time;
      if (dt >= remain || remain - dt < 1e-12 * opt.sample_every) dt = remain;
      strang_step(st, dt, p, sc, &acc_friction);
      if (p.nu > 0.0) {
        const double rate = viscous_rate(st, p);
        acc_viscous.add(0.5 * dt * (prev_visc_rate + rate));
        prev_visc_rate = rate;
      }
      traj.dt_max = std::max(traj.dt_max, dt);
      traj.dt_min = traj.dt_min == 0.0 ? dt : std::min(traj.dt_min, dt);
      if (++steps > opt.max_steps)
        throw StepLimitError("step budget exhausted", st.time);
    }
    st.time = t_target;  // absorb landing round-off
    check_state_health(st, p);
    record_sample(k);
  }
  return traj;
}

}  // namespace nsk
