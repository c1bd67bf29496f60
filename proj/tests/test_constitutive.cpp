/// @file test_constitutive.cpp
/// @brief Pointwise constitutive laws against finite differences, closed-form
///        values, and the exact identities they must satisfy.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nsk/constitutive.hpp"

using namespace nsk;

namespace {

// Fourth-order central difference of a scalar function.
template <typename F>
double fd1(F&& f, double x, double h) {
  return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12.0 * h);
}

bool near(double a, double b, double tol, double scale = 1.0) {
  return std::abs(a - b) <= tol * std::max(scale, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST_CASE("bump profile: closed-form values at z = 1/2") {
  BumpSpec bump{0.7, 1.1, 0.3};
  const double rho = bump.center + bump.halfwidth / 2.0;  // z = 1/2
  const double f = std::exp(-4.0 / 3.0);

  // phi' = -2 z u^2 with u = 1/(1-z^2) = 4/3; chain rule brings 1/w per order.
  const double e1 = bump.amplitude / bump.halfwidth * (-16.0 / 9.0) * f;
  // phi'' + phi'^2 = -224/27 + 256/81 = -416/81.
  const double e2 =
      bump.amplitude / (bump.halfwidth * bump.halfwidth) * (-416.0 / 81.0) * f;

  CHECK(near(bump_e(rho, bump, 0), bump.amplitude * f, 1e-15));
  CHECK(near(bump_e(rho, bump, 1), e1, 1e-14));
  CHECK(near(bump_e(rho, bump, 2), e2, 1e-14));
  CHECK(near(bump_e(bump.center, bump, 0), bump.amplitude * std::exp(-1.0), 1e-15));
}

TEST_CASE("bump profile: derivatives match finite differences inside the support") {
  BumpSpec bump{1.3, 1.0, 0.4};
  const double h = 1e-4;
  for (double z : {-0.8, -0.45, -0.1, 0.2, 0.55, 0.85}) {
    const double rho = bump.center + z * bump.halfwidth;
    const double scale = bump.amplitude / bump.halfwidth;
    CHECK(near(bump_e(rho, bump, 1),
               fd1([&](double r) { return bump_e(r, bump, 0); }, rho, h), 1e-8,
               scale));
    CHECK(near(bump_e(rho, bump, 2),
               fd1([&](double r) { return bump_e(r, bump, 1); }, rho, h), 1e-7,
               scale / bump.halfwidth));
    CHECK(near(bump_e(rho, bump, 3),
               fd1([&](double r) { return bump_e(r, bump, 2); }, rho, h), 1e-6,
               scale / (bump.halfwidth * bump.halfwidth)));
  }
}

TEST_CASE("bump profile: compact support is exact") {
  BumpSpec bump{2.0, 1.0, 0.4};
  for (int order = 0; order <= 3; ++order) {
    CHECK(bump_e(0.6, bump, order) == 0.0);
    CHECK(bump_e(1.4, bump, order) == 0.0);
    CHECK(bump_e(0.1, bump, order) == 0.0);
    CHECK(bump_e(5.0, bump, order) == 0.0);
  }
  // Just inside the edge everything is finite and tiny.
  CHECK(std::abs(bump_e(1.0 + 0.4 * (1.0 - 1e-4), bump, 0)) < 1e-200 * 2.0 + 1e-12);
  CHECK(std::isfinite(bump_e(1.0 + 0.4 * (1.0 - 1e-4), bump, 3)));
}

TEST_CASE("enthalpy and pressure: closed forms and derivative consistency") {
  Params p;
  p.gamma = 2.0;
  p.bump.amplitude = 0.0;

  // gamma = 2 without a bump: h = rho^2, p = rho^2.
  CHECK(near(enthalpy(1.3, p), 1.69, 1e-15));
  CHECK(near(pressure(1.3, p), 1.69, 1e-15));
  CHECK(near(pressure(1.3, p, 1), 2.6, 1e-15));

  Params q;
  q.gamma = 2.4;
  q.s = 0.3;
  q.bump = {0.8, 1.0, 0.35};
  const double h = 1e-5;
  for (double rho : {0.7, 0.9, 1.05, 1.3, 1.9}) {
    CHECK(near(enthalpy(rho, q, 1),
               fd1([&](double r) { return enthalpy(r, q, 0); }, rho, h), 1e-8));
    CHECK(near(enthalpy(rho, q, 2),
               fd1([&](double r) { return enthalpy(r, q, 1); }, rho, h), 1e-7));
    CHECK(near(pressure(rho, q, 1),
               fd1([&](double r) { return pressure(r, q, 0); }, rho, h), 1e-8));
    CHECK(near(pressure(rho, q, 2),
               fd1([&](double r) { return pressure(r, q, 1); }, rho, h), 1e-7));
    // p = rho h' - h and its split.
    CHECK(near(pressure(rho, q), rho * enthalpy(rho, q, 1) - enthalpy(rho, q), 1e-14));
    const PressureSplit ps = pressure_split(rho, q);
    CHECK(near(ps.p_gamma, std::pow(rho, q.gamma), 1e-14));
    CHECK(near(ps.p_gamma + ps.p_e, pressure(rho, q), 1e-14));
  }
}

TEST_CASE("non-monotone window appears exactly at the amplitude threshold") {
  Params p;
  p.gamma = 3.0;
  p.s = 2.0;
  p.bump = {0.0, 0.8, 0.12};

  const double astar = find_bump_threshold(p);
  REQUIRE(std::isfinite(astar));
  REQUIRE(astar > 0.0);

  // The threshold ignores the amplitude stored in the parameter set.
  Params loaded = p;
  loaded.bump.amplitude = 5.0;
  CHECK(find_bump_threshold(loaded) == astar);

  p.bump.amplitude = 1.5 * astar;
  const auto window = check_nonmonotone(p);
  REQUIRE(window.has_value());
  CHECK(window->first < window->second);
  CHECK(window->first > p.bump.center - p.bump.halfwidth);
  CHECK(window->second < p.bump.center + p.bump.halfwidth);
  // Window edges are sampled points of the negative set; the interior is not
  // guaranteed (two disjoint dips for this narrow bump).
  CHECK(pressure(window->first, p, 1) < 0.0);
  CHECK(pressure(window->second, p, 1) < 0.0);

  p.bump.amplitude = 0.5 * astar;
  CHECK(!check_nonmonotone(p).has_value());
  p.bump.amplitude = 1.001 * astar;
  CHECK(check_nonmonotone(p).has_value());
  p.bump.amplitude = 0.999 * astar;
  CHECK(!check_nonmonotone(p).has_value());
  p.bump.amplitude = 0.0;
  CHECK(!check_nonmonotone(p).has_value());
}

TEST_CASE("capillarity ladder: mu' = sqrt(rho k) and the matched Lame pair") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> rho_d(0.3, 3.0);
  for (double s : {-1.0, -0.5, 0.0, 1.0, 2.5}) {
    Params p;
    p.gamma = 4.0;  // keep every s legal for the plain invariants
    p.s = s;
    for (int i = 0; i < 50; ++i) {
      const double rho = rho_d(rng);
      const double mu = capillary_mu(rho, p);
      const double mup = capillary_mu(rho, p, 1);
      const double lam = lame_lambda(rho, p);
      CHECK(near(mup, std::sqrt(rho * capillarity_k(rho, p)), 1e-13));
      CHECK(near(lam, 2.0 * (mup * rho - mu), 1e-13));
      CHECK(near(lam, (s + 1.0) * mu, 1e-13));
      CHECK(near(mu + 0.5 * lam, 0.5 * (s + 3.0) * mu, 1e-13));
      CHECK(near(capillarity_k(rho, p, 1),
                 fd1([&](double r) { return capillarity_k(r, p); }, rho, 1e-5),
                 1e-8));
      CHECK(near(capillary_mu(rho, p, 2),
                 fd1([&](double r) { return capillary_mu(r, p, 1); }, rho, 1e-5),
                 1e-8));
    }
  }
}

TEST_CASE("viscous Lame pair follows the capillarity pair") {
  Params p;
  p.s = 0.5;
  p.gamma = 3.0;
  const double rho = 1.7;
  ViscousPair bd = lame_viscous(rho, p);
  CHECK(bd.mu == capillary_mu(rho, p));
  CHECK(bd.lambda == lame_lambda(rho, p));

  p.lame = {LameKind::Scaled, 0.3};
  ViscousPair sc = lame_viscous(rho, p);
  CHECK(near(sc.mu, 0.3 * bd.mu, 1e-15));
  CHECK(near(sc.lambda, 0.3 * bd.lambda, 1e-15));
}

TEST_CASE("relative enthalpy: Bregman structure and quadratic Taylor limit") {
  Params p;
  p.gamma = 2.7;
  p.bump = {0.9, 1.0, 0.4};

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rho_d(0.5, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double a = rho_d(rng), b = rho_d(rng);
    const RelEnthalpy re = rel_enthalpy(a, b, p);
    CHECK(re.h_gamma >= 0.0);  // gamma part is convex
    CHECK(rel_enthalpy(a, a, p).h_gamma == 0.0);
    CHECK(rel_enthalpy(a, a, p).h_e == 0.0);
    CHECK(rel_pressure_identity_residual(a, b, p) <= 1e-12);
  }

  // h(rho_bar + d | rho_bar) -> (1/2) h''(rho_bar) d^2.
  const double rb = 1.1, d = 1e-4;
  const RelEnthalpy re = rel_enthalpy(rb + d, rb, p);
  const double hg2 = p.gamma * std::pow(rb, p.gamma - 2.0);  // (rho^g/(g-1))''
  CHECK(near(re.h_gamma, 0.5 * hg2 * d * d, 1e-3, re.h_gamma));
  CHECK(near(re.h_e, 0.5 * bump_e(rb, p.bump, 2) * d * d, 1e-3,
             std::abs(re.h_e) + 1e-12));
}

TEST_CASE("parameter validation rejects out-of-range sets") {
  auto bad = [](auto&& tweak) {
    Params p;
    tweak(p);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  };
  bad([](Params& p) { p.gamma = 1.0; });
  bad([](Params& p) { p.s = -1.5; });
  bad([](Params& p) { p.epsilon = 0.0; });
  bad([](Params& p) { p.nu = -0.1; });
  bad([](Params& p) { p.rho_floor = 0.0; });
  bad([](Params& p) { p.bump.halfwidth = 0.0; });
  bad([](Params& p) { p.bump.amplitude = -1.0; });

  Params p;
  p.gamma = 2.0;
  p.s = 0.5;  // above gamma - 2
  CHECK_THROWS_AS(p.validate(StudyMode::Relaxation), std::invalid_argument);
  p.s = 0.0;
  CHECK_NOTHROW(p.validate(StudyMode::Relaxation));

  p.s = 1.0;  // boundary 2 gamma - 3 is legal, but nu must be positive
  CHECK_THROWS_AS(p.validate(StudyMode::WeakStrong), std::invalid_argument);
  p.nu = 0.05;
  CHECK_NOTHROW(p.validate(StudyMode::WeakStrong));
  p.s = 1.5;
  CHECK_THROWS_AS(p.validate(StudyMode::WeakStrong), std::invalid_argument);
}
