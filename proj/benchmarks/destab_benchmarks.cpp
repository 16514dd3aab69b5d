#include <random>

#include <benchmark/benchmark.h>

#include "destab/nonlin.hpp"
#include "destab/verify.hpp"

namespace {

using namespace destab;

// Stable system of order n with a random orthogonal change of basis.
StateSpace random_stable(int n, int m, int p, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  RealMatrix lambda = RealMatrix::Zero(n, n);
  for (int k = 0; k + 1 < n; k += 2) {
    const double re = -0.2 - 0.1 * k, im = 0.5 + 0.3 * k;
    lambda(k, k) = lambda(k + 1, k + 1) = re;
    lambda(k, k + 1) = im;
    lambda(k + 1, k) = -im;
  }
  if (n % 2) lambda(n - 1, n - 1) = -1.0;
  RealMatrix raw(n, n), b(n, m), c(p, n);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = dist(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = dist(rng);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = dist(rng);
  const RealMatrix q = Eigen::HouseholderQR<RealMatrix>(raw).householderQ();
  return StateSpace(q * lambda * q.transpose(), b, c, RealMatrix::Zero(p, m));
}

void BM_HinfNorm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const StateSpace g = random_stable(n, 2, 2, 42);
  for (auto _ : state) benchmark::DoNotOptimize(hinf_norm(g).peak);
}
BENCHMARK(BM_HinfNorm)->Arg(2)->Arg(8)->Arg(32);

void BM_Synthesize(benchmark::State& state) {
  const StateSpace g = random_stable(static_cast<int>(state.range(0)), 3, 3, 7);
  for (auto _ : state) benchmark::DoNotOptimize(synthesize(g).claimed_norm);
}
BENCHMARK(BM_Synthesize)->Arg(4)->Arg(8);

void BM_TraceBranch(benchmark::State& state) {
  const StateSpace g = random_stable(8, 2, 2, 3);
  const AttackSystem att = synthesize(g);
  for (auto _ : state) benchmark::DoNotOptimize(trace_branch(g, att).crossing_rate);
}
BENCHMARK(BM_TraceBranch);

void BM_IntegrateOscillator(benchmark::State& state) {
  const NonlinearSystem sys = cubic_damped_oscillator();
  const AttackSystem att = synthesize(linearize(sys));
  const LoopField loop = close_loop(sys, att);
  RealVector x0(2);
  x0 << 0.01, 0.01;
  IntegrationOptions options;
  options.t_final = 20.0;
  options.method = state.range(0) == 0 ? Method::kRk4 : Method::kRk45;
  for (auto _ : state) benchmark::DoNotOptimize(integrate(loop.field, x0, options).max_norm);
}
BENCHMARK(BM_IntegrateOscillator)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
