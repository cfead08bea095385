#include <benchmark/benchmark.h>

#include "rtrunc/maxent.hpp"
#include "rtrunc/mps.hpp"
#include "rtrunc/oracle.hpp"
#include "rtrunc/powerlaw.hpp"
#include "rtrunc/tracedist.hpp"

using namespace rtrunc;

namespace {

Exec exec_of(const benchmark::State& state)
{
    return state.range(0) == 0 ? Exec::serial : Exec::parallel;
}

maxent::MaxEntModel random_model(int n, int ell)
{
    Rng rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> mu(static_cast<std::size_t>(n));
    for (auto& x : mu) {
        x = u(rng);
    }
    return maxent::build_model(mu, ell);
}

SparseEnsemble powerlaw_ensemble(int d, int k)
{
    const auto canon = powerlaw::powerlaw_vector(d, 0.75);
    return tracedist::build_ensemble(tracedist::solve(canon, k), canon);
}

void BM_PairMarginals(benchmark::State& state)
{
    const auto model = random_model(400, 100);
    for (auto _ : state) {
        benchmark::DoNotOptimize(maxent::pair_marginals(model, exec_of(state)));
    }
}
BENCHMARK(BM_PairMarginals)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SecondMoment(benchmark::State& state)
{
    const auto ens = powerlaw_ensemble(1000, 200);
    for (auto _ : state) {
        benchmark::DoNotOptimize(second_moment(ens, exec_of(state)));
    }
}
BENCHMARK(BM_SecondMoment)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MonteCarloMoments(benchmark::State& state)
{
    const auto ens = powerlaw_ensemble(64, 16);
    CMat op = CMat::Zero(64, 64);
    op(0, 0) = 1.0;
    op(63, 63) = -1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(oracle::monte_carlo_moments(ens, op, 20000, 3, exec_of(state), 0.0));
    }
}
BENCHMARK(BM_MonteCarloMoments)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BruteForceRestarts(benchmark::State& state)
{
    RVec v(8);
    v << 0.6, 0.5, 0.4, 0.3, 0.25, 0.2, 0.1, 0.05;
    for (auto _ : state) {
        Rng rng(5);
        benchmark::DoNotOptimize(oracle::brute_force_Tk(v, 3, 32, rng));
    }
}
BENCHMARK(BM_BruteForceRestarts)->Unit(benchmark::kMillisecond);

void BM_PowerlawSweep(benchmark::State& state)
{
    powerlaw::SweepConfig cfg;
    cfg.d = 2048;
    for (auto _ : state) {
        benchmark::DoNotOptimize(powerlaw::powerlaw_sweep(cfg, exec_of(state)));
    }
}
BENCHMARK(BM_PowerlawSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MpsExperiment(benchmark::State& state)
{
    mps::ExperimentConfig cfg;
    cfg.n = 7;
    cfg.gammas = {0.2};
    cfg.seeds = {1};
    cfg.samples = 20;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mps::run_experiment(cfg, exec_of(state)));
    }
}
BENCHMARK(BM_MpsExperiment)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SolveFast(benchmark::State& state)
{
    const auto canon = powerlaw::powerlaw_vector(static_cast<int>(state.range(0)), 0.75);
    for (auto _ : state) {
        benchmark::DoNotOptimize(tracedist::solve(canon, static_cast<int>(state.range(0) / 10)));
    }
}
BENCHMARK(BM_SolveFast)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SolveExhaustive(benchmark::State& state)
{
    const auto canon = powerlaw::powerlaw_vector(static_cast<int>(state.range(0)), 0.75);
    for (auto _ : state) {
        benchmark::DoNotOptimize(tracedist::solve_exhaustive(canon, static_cast<int>(state.range(0) / 10)));
    }
}
BENCHMARK(BM_SolveExhaustive)->Arg(1000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
