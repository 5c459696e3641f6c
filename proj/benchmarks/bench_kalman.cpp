#include <benchmark/benchmark.h>

#include "bvs/variational.hpp"

namespace {

void BM_KalmanSmoother(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const bvs::LGParams theta = bvs::scalar_lg_params(0.0, 1.0, 0.9, 0.1, 1.0, 0.5);
    const bvs::Trajectory traj = bvs::simulate_lg(theta, n, 1);
    for (auto _ : state) benchmark::DoNotOptimize(bvs::exact_smoother(theta, traj.observations));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KalmanSmoother)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oN);

void BM_ElboRecursive(benchmark::State& state) {
    const bvs::LGParams theta = bvs::scalar_lg_params(0.0, 1.0, 0.9, 0.1, 1.0, 0.5);
    const bvs::LGParams lambda = bvs::scalar_lg_params(0.1, 1.2, 0.8, 0.2, 1.1, 0.4);
    const bvs::Trajectory traj = bvs::simulate_lg(theta, static_cast<std::size_t>(state.range(0)), 2);
    const bvs::BackwardVariational q = bvs::variational_from_model(lambda, traj.observations);
    for (auto _ : state) benchmark::DoNotOptimize(bvs::elbo_recursive(theta, q, traj.observations).elbo);
}
BENCHMARK(BM_ElboRecursive)->Arg(64)->Arg(512);

}  // namespace
