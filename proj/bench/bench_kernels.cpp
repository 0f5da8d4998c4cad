#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "evpred/combined_forecast.hpp"
#include "evpred/incidence.hpp"
#include "evpred/kernels.hpp"
#include "evpred/recruitment.hpp"

using namespace evpred;
using kernels::Execution;

namespace {
CureModelParams params() { return {Weibull::from_scale(0.8, 182.0), Weibull::from_scale(0.6, 2611.0), 0.2}; }

std::vector<double> exposures(std::size_t n) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<> u(0.0, 400.0);
  std::vector<double> z(n);
  for (auto& v : z) v = u(g);
  return z;
}

std::vector<RateTerm> terms(std::size_t n) {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<> u(0.0, 1.0);
  std::vector<RateTerm> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i].open_day = 60 * u(g);
    if (i % 3) t[i].closure_day = 200 + 200 * u(g);
    t[i].rate_mean = 0.005 + 0.02 * u(g);
    t[i].rate_var = 1e-5 * u(g);
  }
  return t;
}

std::vector<double> days(std::size_t n) {
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = double(i + 1);
  return d;
}

Execution exec_of(const benchmark::State& s) { return s.range(1) ? Execution::Parallel : Execution::Serial; }

void BM_atrisk_stepper(benchmark::State& state) {
  const EventIncidence inc(params());
  const auto z = exposures(state.range(0));
  const auto grid = days(365);
  std::vector<double> out(grid.size() * z.size());
  for (auto _ : state) {
    kernels::AtRiskStepper st(inc, z);
    st.advance(grid, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_recruitment_moments(benchmark::State& state) {
  const auto t = terms(state.range(0));
  const auto grid = days(3650);
  std::vector<double> m(grid.size()), v(grid.size());
  for (auto _ : state) {
    recruitment_moments(t, grid, m, v, exec_of(state));
    benchmark::DoNotOptimize(m.data());
  }
}

void BM_newrecruit_moments(benchmark::State& state) {
  const auto t = terms(state.range(0));
  const auto grid = days(730);
  std::vector<double> m(grid.size()), v(grid.size());
  for (auto _ : state) {
    EventYield y(params());
    newrecruit_moments(y, t, grid, m, v, exec_of(state));
    benchmark::DoNotOptimize(m.data());
  }
}
}  // namespace

// second argument: 0 serial, 1 OpenMP
BENCHMARK(BM_atrisk_stepper)->ArgsProduct({{200, 2000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_recruitment_moments)->ArgsProduct({{50, 500}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_newrecruit_moments)->ArgsProduct({{50, 500}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
