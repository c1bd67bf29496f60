/// @file bench_solver.cpp
/// @brief Microbenchmarks for the hot paths: spectral derivative, nonstiff
///        right-hand side assembly, one full Strang step, one gradient-flow
///        step span, and the relative-entropy evaluation.

#include <benchmark/benchmark.h>

#include <cmath>

#include "nsk/constitutive.hpp"
#include "nsk/darcy.hpp"
#include "nsk/dynamics.hpp"
#include "nsk/entropy.hpp"
#include "nsk/grid.hpp"

namespace {

using namespace nsk;

Params bench_params() {
  Params p;
  p.epsilon = 0.1;
  p.nu = 0.01;
  p.bump.amplitude = 1.5 * find_bump_threshold(p);
  return p;
}

State bench_state(int n, const Params& p) {
  auto g = Grid::create(n, p.domain_length);
  State st;
  st.rho = g->sample_fn([](double x) {
    return 1.0 + 0.1 * std::cos(x) + 0.05 * std::sin(2.0 * x);
  });
  st.m = g->sample_fn([](double x) { return 0.02 * std::sin(x); });
  Field mu = g->make_field();
  for (std::size_t j = 0; j < mu.size(); ++j) mu.v[j] = capillary_mu(st.rho.v[j], p, 0);
  st.J = g->deriv(mu, 1);
  return st;
}

void BM_spectral_deriv(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto g = Grid::create(n, 2.0 * kPi);
  Field f = g->sample_fn([](double x) { return std::exp(std::sin(x)); });
  for (auto _ : state) {
    Field d = g->deriv(f, 1);
    benchmark::DoNotOptimize(d.v.data());
  }
}
BENCHMARK(BM_spectral_deriv)->Arg(128)->Arg(256)->Arg(1024);

void BM_rhs_scaled(benchmark::State& state) {
  const Params p = bench_params();
  const State st = bench_state(static_cast<int>(state.range(0)), p);
  for (auto _ : state) {
    Rhs r = rhs_scaled(st, p);
    benchmark::DoNotOptimize(r.d_rho.v.data());
  }
}
BENCHMARK(BM_rhs_scaled)->Arg(128)->Arg(256);

void BM_strang_step(benchmark::State& state) {
  const Params p = bench_params();
  const State st0 = bench_state(static_cast<int>(state.range(0)), p);
  const double dt = 0.5 * cfl_dt(st0, p);
  for (auto _ : state) {
    State st = st0;
    step(st, dt, p, StepPolicy::TrustDt);
    benchmark::DoNotOptimize(st.rho.v.data());
  }
}
BENCHMARK(BM_strang_step)->Arg(128)->Arg(256);

void BM_gradient_flow_span(benchmark::State& state) {
  Params p = bench_params();
  auto g = Grid::create(static_cast<int>(state.range(0)), p.domain_length);
  Field rho0 = g->sample_fn([](double x) { return 1.0 + 0.1 * std::cos(x); });
  GfOptions opt;
  opt.sample_every = 1e-3;
  for (auto _ : state) {
    GfTrajectory traj = solve_gradient_flow(rho0, 1e-3, p, opt);
    benchmark::DoNotOptimize(traj.rho.back().v.data());
  }
}
BENCHMARK(BM_gradient_flow_span)->Arg(128)->Arg(256);

void BM_relative_entropy(benchmark::State& state) {
  const Params p = bench_params();
  const State st = bench_state(static_cast<int>(state.range(0)), p);
  const StrongLift ref = lift_strong(st.rho, 0.0, p);
  for (auto _ : state) {
    RelativeEntropy re = relative_entropy(st, ref, p);
    benchmark::DoNotOptimize(re);
  }
}
BENCHMARK(BM_relative_entropy)->Arg(128)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
