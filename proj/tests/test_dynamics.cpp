/// @file test_dynamics.cpp
/// @brief Scaled-system right-hand side against a finite-difference oracle,
///        exactness of the stiff friction half-steps, conservation of the
///        transport invariants, and the simulation loop's contracts.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "nsk/darcy.hpp"
#include "nsk/dynamics.hpp"

using namespace nsk;

namespace {

// Fourth-order central difference on a periodic array.
std::vector<double> fd_deriv(const std::vector<double>& f, double dx) {
  const int n = static_cast<int>(f.size());
  std::vector<double> d(n);
  auto at = [&](int j) { return f[(j % n + n) % n]; };
  for (int j = 0; j < n; ++j)
    d[j] = (8.0 * (at(j + 1) - at(j - 1)) - (at(j + 2) - at(j - 2))) / (12.0 * dx);
  return d;
}

State seeded_state(const Grid& g, const Params& p) {
  State st;
  st.rho = g.sample_fn([](double x) {
    return 1.0 + 0.2 * std::cos(x) + 0.1 * std::sin(2 * x);
  });
  st.m = g.sample_fn([](double x) {
    return 0.1 * std::sin(x) - 0.05 * std::cos(3 * x);
  });
  st.J = g.sample_fn([](double x) { return 0.02 * std::cos(2 * x); });
  Field dmu = g.deriv(g.sample_fn([&](double x) {
                        const double r = 1.0 + 0.2 * std::cos(x) + 0.1 * std::sin(2 * x);
                        return std::pow(r, (p.s + 3.0) / 2.0);
                      }),
                      1);
  for (int j = 0; j < g.n(); ++j) st.J[j] += dmu[j];
  return st;
}

// Independent assembly of the scaled right-hand side: every derivative is a
// fourth-order finite difference, every coefficient comes from the pointwise
// constitutive calls. Converges to the spectral assembly at O(dx^4).
Rhs fd_rhs(const State& st, const Params& p) {
  const Grid& g = *st.rho.grid;
  const int n = g.n();
  const double dx = g.dx();
  const double inv_eps = 1.0 / p.epsilon;

  std::vector<double> u(n), mu(n), coeff(n), pres(n), conv(n), Ju(n);
  for (int j = 0; j < n; ++j) {
    u[j] = st.m[j] / st.rho[j];
    mu[j] = capillary_mu(st.rho[j], p);
    coeff[j] = mu[j] + 0.5 * lame_lambda(st.rho[j], p);
    pres[j] = pressure(st.rho[j], p);
    conv[j] = st.m[j] * u[j];
    Ju[j] = st.J[j] * u[j];
  }
  std::vector<double> du = fd_deriv(u, dx);
  std::vector<double> v = fd_deriv(mu, dx);
  for (int j = 0; j < n; ++j) v[j] /= st.rho[j];
  std::vector<double> dv = fd_deriv(v, dx);

  std::vector<double> s1(n), s2(n), tnu(n);
  for (int j = 0; j < n; ++j) {
    s1[j] = coeff[j] * dv[j];
    s2[j] = coeff[j] * du[j];
    const ViscousPair vp = lame_viscous(st.rho[j], p);
    tnu[j] = p.nu * (2.0 * vp.mu + vp.lambda) * du[j];
  }

  Rhs out{g.make_field(), g.make_field(), g.make_field()};
  std::vector<double> dm = fd_deriv(st.m.v, dx);
  std::vector<double> dconv = fd_deriv(conv, dx);
  std::vector<double> dpres = fd_deriv(pres, dx);
  std::vector<double> ds1 = fd_deriv(s1, dx);
  std::vector<double> dtnu = fd_deriv(tnu, dx);
  std::vector<double> dJu = fd_deriv(Ju, dx);
  std::vector<double> ds2 = fd_deriv(s2, dx);
  const double c2 = p.s2_scaling == S2Scaling::InvEpsilon ? inv_eps : 1.0;
  for (int j = 0; j < n; ++j) {
    out.d_rho[j] = -inv_eps * dm[j];
    out.d_m[j] = inv_eps * (-dconv[j] - dpres[j] + ds1[j] + dtnu[j]);
    out.d_J[j] = -inv_eps * dJu[j] - c2 * ds2[j];
  }
  return out;
}

double rhs_distance(const Rhs& a, const Rhs& b) {
  double e = 0;
  for (std::size_t j = 0; j < a.d_rho.size(); ++j) {
    e = std::max(e, std::abs(a.d_rho[j] - b.d_rho[j]));
    e = std::max(e, std::abs(a.d_m[j] - b.d_m[j]));
    e = std::max(e, std::abs(a.d_J[j] - b.d_J[j]));
  }
  return e;
}

double kahan_node_mean(const Field& f) {
  double sum = 0, comp = 0;
  for (double x : f.v) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(f.size());
}

}  // namespace

TEST_CASE("drift velocity: constant density gives zero, closed form for s = -1") {
  Params p;
  auto g = Grid::create(128, 2.0 * kPi);

  State flat;
  flat.rho = g->make_field(1.7);
  CHECK(linf_norm(drift_velocity(flat.rho, p)) == 0.0);

  // s = -1: mu(rho) = rho, so v = (d rho/dx)/rho exactly.
  Field rho = g->sample_fn([](double x) { return 1.0 + 0.3 * std::sin(x); });
  Field v = drift_velocity(rho, p);
  double err = 0;
  for (int j = 0; j < g->n(); ++j) {
    const double x = g->node(j);
    err = std::max(err, std::abs(v[j] - 0.3 * std::cos(x) / (1.0 + 0.3 * std::sin(x))));
  }
  CHECK(err < 1e-12);

  Params q;
  q.gamma = 3.0;
  q.s = 0.0;
  CHECK(drift_velocity_form_residual(rho, q) < 1e-11);
}

TEST_CASE("right-hand side converges to the finite-difference oracle at fourth order") {
  Params p;
  p.gamma = 2.2;
  p.s = 0.2;
  p.epsilon = 0.5;
  p.nu = 0.3;
  p.bump = {0.1, 1.0, 0.4};

  auto err_at = [&](int n) {
    auto g = Grid::create(n, 2.0 * kPi);
    State st = seeded_state(*g, p);
    return rhs_distance(rhs_scaled(st, p), fd_rhs(st, p));
  };
  const double e128 = err_at(128);
  const double e256 = err_at(256);
  CHECK(e256 > 1e-8);  // far above either scheme's round-off floor
  CHECK(e128 / e256 == doctest::Approx(16.0).epsilon(0.35));
}

TEST_CASE("capillarity-viscosity exchange: both assemblies agree once resolved") {
  // s = 0 keeps mu = rho^(3/2) non-polynomial (integer s makes both
  // assemblies exact trig polynomials at any N, leaving only round-off), and
  // the near-vacuum amplitude pushes the spectral tail up so N = 64 is
  // genuinely truncation-dominated.
  Params p;
  p.gamma = 3.0;
  p.s = 0.0;

  auto res_at = [&](int n) {
    auto g = Grid::create(n, 2.0 * kPi);
    Field rho = g->sample_fn([](double x) { return 2.0 + 1.9 * std::sin(x); });
    return bohm_residual(rho, p);
  };
  const double r64 = res_at(64);
  const double r128 = res_at(128);
  CHECK(r64 / r128 >= 1e2);  // truncation-dominated at 64, collapsed at 128
}

TEST_CASE("constant states are exact fixed points of the full step") {
  Params p;
  p.epsilon = 0.2;
  auto g = Grid::create(64, 2.0 * kPi);
  State st;
  st.time = 0.0;
  st.rho = g->make_field(1.7);
  st.m = g->make_field(0.0);
  st.J = g->make_field(0.0);

  Rhs r = rhs_scaled(st, p);
  CHECK(linf_norm(r.d_rho) == 0.0);
  CHECK(linf_norm(r.d_m) == 0.0);
  CHECK(linf_norm(r.d_J) == 0.0);

  for (int k = 0; k < 200; ++k) step(st, 1e-3, p, StepPolicy::TrustDt);
  for (int j = 0; j < g->n(); ++j) {
    CHECK(st.rho[j] == 1.7);
    CHECK(st.m[j] == 0.0);
    CHECK(st.J[j] == 0.0);
  }
}

TEST_CASE("friction half-steps integrate the stiff relaxation exactly") {
  Params p;
  p.epsilon = 0.1;  // dt/eps^2 = 100 dt
  auto g = Grid::create(64, 2.0 * kPi);
  State st;
  st.rho = g->make_field(2.0);
  st.m = g->make_field(3.0);
  st.J = g->make_field(0.0);

  // Constant momentum: every transport flux is constant, so only friction acts.
  CHECK(linf_norm(rhs_scaled(st, p).d_m) == 0.0);

  SUBCASE("accumulated decay over many steps") {
    const double dt = 1e-3;
    for (int k = 0; k < 1000; ++k) step(st, dt, p, StepPolicy::TrustDt);
    const double expect = 3.0 * std::exp(-1000 * dt / (p.epsilon * p.epsilon));
    for (int j = 0; j < g->n(); ++j)
      CHECK(st.m[j] == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("one step at stiffness ratio 200") {
    step(st, 2.0, p, StepPolicy::TrustDt);
    const double expect = 3.0 * std::exp(-200.0);
    for (int j = 0; j < g->n(); ++j)
      CHECK(st.m[j] == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("one step at stiffness ratio 1e6 underflows cleanly") {
    step(st, 1e6 * p.epsilon * p.epsilon, p, StepPolicy::TrustDt);
    for (int j = 0; j < g->n(); ++j) CHECK(st.m[j] == 0.0);
  }
  SUBCASE("friction_decay is the same exact map") {
    friction_decay(st, 0.5, p);
    for (int j = 0; j < g->n(); ++j)
      CHECK(st.m[j] == 3.0 * std::exp(-0.5 / (p.epsilon * p.epsilon)));
  }
}

TEST_CASE("cfl policy: TrustDt bypasses the bound, EnforceCfl rejects it") {
  Params p;
  p.epsilon = 0.3;
  auto g = Grid::create(64, 2.0 * kPi);
  State st = seeded_state(*g, p);

  const double bound = cfl_dt(st, p, 1.0);
  CHECK(bound > 0.0);
  State a = st;
  CHECK_THROWS_AS(step(a, 2.0 * bound, p, StepPolicy::EnforceCfl), CflError);
  State b = st;
  CHECK_NOTHROW(step(b, 2.0 * bound, p, StepPolicy::TrustDt));

  // The bound scales linearly with epsilon (stiffness enters the transport
  // speeds as 1/eps).
  Params p2 = p;
  p2.epsilon = 0.15;
  State st2 = seeded_state(*g, p2);
  CHECK(cfl_dt(st2, p2, 1.0) == doctest::Approx(0.5 * bound).epsilon(0.05));
}

TEST_CASE("one Strang step is at least second-order accurate locally") {
  Params p;
  p.gamma = 2.0;
  p.s = -1.0;
  p.epsilon = 0.5;
  p.nu = 0.1;
  auto g = Grid::create(64, 2.0 * kPi);
  const State st0 = seeded_state(*g, p);

  const double dt = 2e-4;
  auto advance = [&](int steps, double h) {
    State st = st0;
    for (int k = 0; k < steps; ++k) step(st, h, p, StepPolicy::TrustDt);
    return st;
  };
  const State ref = advance(16, dt / 16);
  auto dist = [&](const State& a, const State& b) {
    double e = 0;
    for (int j = 0; j < g->n(); ++j) {
      e = std::max(e, std::abs(a.rho[j] - b.rho[j]));
      e = std::max(e, std::abs(a.m[j] - b.m[j]));
      e = std::max(e, std::abs(a.J[j] - b.J[j]));
    }
    return e;
  };
  const double e1 = dist(advance(1, dt), ref);
  const double e2 = dist(advance(2, dt / 2), ref);
  CHECK(e1 / e2 >= 3.4);  // 2^2 with splitting-error slack
}

TEST_CASE("transport invariants: density and drift means are exact, momentum mean decays with friction") {
  Params p;
  p.epsilon = 0.25;
  auto g = Grid::create(128, 2.0 * kPi);
  State st = seeded_state(*g, p);
  for (int j = 0; j < g->n(); ++j) st.m[j] += 0.2;  // nonzero momentum mean

  const double rho_mean = kahan_node_mean(st.rho);
  const double m_mean = kahan_node_mean(st.m);
  const double J_mean = kahan_node_mean(st.J);

  const double dt = 1e-4;
  const int steps = 400;
  for (int k = 0; k < steps; ++k) step(st, dt, p, StepPolicy::TrustDt);

  CHECK(kahan_node_mean(st.rho) == doctest::Approx(rho_mean).epsilon(1e-15));
  CHECK(kahan_node_mean(st.J) == doctest::Approx(J_mean).epsilon(1e-14));
  const double decay = std::exp(-steps * dt / (p.epsilon * p.epsilon));
  CHECK(kahan_node_mean(st.m) ==
        doctest::Approx(m_mean * decay).epsilon(1e-11));
}

TEST_CASE("simulate: exact schedule, snapshots, and bitwise mass record") {
  Params p;
  p.epsilon = 0.4;
  auto g = Grid::create(64, 2.0 * kPi);
  State st = seeded_state(*g, p);

  SimulateOptions opt;
  opt.sample_every = 5e-3;
  opt.keep_snapshots = true;
  Trajectory traj = simulate(st, 0.05, p, opt);

  REQUIRE(traj.records.size() == 11);
  REQUIRE(traj.snapshots.size() == 11);
  for (std::size_t k = 0; k < traj.records.size(); ++k) {
    CHECK(traj.records[k].t == 5e-3 * static_cast<double>(k));
    CHECK(traj.records[k].mass == traj.records[0].mass);
  }
  CHECK(traj.dt_max > 0.0);
  CHECK(traj.dt_min > 0.0);
  CHECK(traj.dt_min <= traj.dt_max);
}

TEST_CASE("simulate aborts with typed errors") {
  auto g = Grid::create(64, 2.0 * kPi);

  SUBCASE("step budget") {
    Params p;
    State st = seeded_state(*g, p);
    SimulateOptions opt;
    opt.sample_every = 0.05;
    opt.max_steps = 10;
    CHECK_THROWS_AS(simulate(st, 0.05, p, opt), StepLimitError);
  }
  SUBCASE("positivity floor") {
    Params p;
    p.rho_floor = 0.9;  // seeded density dips to ~0.75
    State st = seeded_state(*g, p);
    SimulateOptions opt;
    opt.sample_every = 0.05;
    CHECK_THROWS_AS(simulate(st, 0.05, p, opt), PositivityError);
  }
  SUBCASE("non-finite state") {
    Params p;
    State st = seeded_state(*g, p);
    st.m[5] = std::numeric_limits<double>::quiet_NaN();
    SimulateOptions opt;
    opt.sample_every = 1e-5;
    CHECK_THROWS_AS(simulate(st, 1e-5, p, opt), NonFiniteError);
  }
}

TEST_CASE("augmented-variable constraint is preserved by the evolution") {
  Params p;
  p.gamma = 2.0;
  p.s = -1.0;
  p.epsilon = 0.3;
  auto g = Grid::create(128, 2.0 * kPi);

  Field rho = g->sample_fn([](double x) { return 1.0 + 0.1 * std::cos(x); });
  State st;
  st.rho = rho;
  st.m = g->make_field(0.0);
  st.J = g->deriv(g->sample_fn([](double x) {
                    return 1.0 + 0.1 * std::cos(x);  // mu = rho for s = -1
                  }),
                  1);
  CHECK(drift_constraint_residual(st, p) < 1e-12);

  SimulateOptions opt;
  opt.sample_every = 0.02;
  Trajectory traj = simulate(st, 0.02, p, opt);
  CHECK(drift_constraint_residual(traj.snapshots.back(), p) < 1e-6);
}
