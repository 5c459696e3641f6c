#include <benchmark/benchmark.h>

#include "bvs/autodiff.hpp"
#include "bvs/experiments.hpp"
#include "bvs/variational.hpp"

namespace {

void BM_LinearElboGradient(benchmark::State& state) {
    const bvs::LGParams theta = bvs::scalar_lg_params(0.0, 1.0, 0.9, 0.1, 1.0, 0.5);
    const bvs::Trajectory traj = bvs::simulate_lg(theta, static_cast<std::size_t>(state.range(0)), 3);
    const bvs::ParamVector p = bvs::lg_to_params(bvs::scalar_lg_params(0.5, 2.0, 0.5, 0.5, 0.5, 1.5));
    const auto theta_v = bvs::cast_params<bvs::ad::Var>(theta);
    for (auto _ : state) {
        auto vg = bvs::ad::forward_backward(
            [&](std::span<const bvs::ad::Var> v) {
                return bvs::elbo_closed_form(theta_v, bvs::lg_from_params<bvs::ad::Var>(p.layout, v),
                                             traj.observations);
            },
            p.values);
        benchmark::DoNotOptimize(vg.gradient.data());
    }
}
BENCHMARK(BM_LinearElboGradient)->Arg(64)->Arg(256);

void BM_AmortizedElboGradient(benchmark::State& state) {
    bvs::NonlinearConfig cfg;
    const bvs::NonlinearEmission emission = bvs::make_emission(cfg);
    const bvs::Trajectory traj =
        bvs::simulate_nonlinear(cfg.dynamics, emission, static_cast<std::size_t>(state.range(0)), 4);
    bvs::AmortizedArchitecture arch;
    bvs::Rng rng(5);
    const bvs::ParamVector p = bvs::init_amortized(arch, cfg.dyn_init, rng);
    const bvs::FrozenNoise noise = bvs::draw_frozen_noise(traj.observations.size(), cfg.mc_samples, 1, 6);
    for (auto _ : state) {
        auto vg = bvs::ad::forward_backward(
            [&](std::span<const bvs::ad::Var> v) {
                const auto model = bvs::read_amortized<bvs::ad::Var>(arch, p.layout, v);
                return bvs::mc_elbo_nonlinear(cfg.dynamics, emission, bvs::amortized_recursion(model, traj.observations),
                                              traj.observations, noise);
            },
            p.values);
        benchmark::DoNotOptimize(vg.gradient.data());
    }
}
BENCHMARK(BM_AmortizedElboGradient)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
