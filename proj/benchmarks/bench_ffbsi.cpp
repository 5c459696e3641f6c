#include <benchmark/benchmark.h>

#include "bvs/ffbsi.hpp"

namespace {

void BM_Ffbsi(benchmark::State& state) {
    const bvs::LGParams theta = bvs::scalar_lg_params(0.0, 1.0, 0.9, 0.1, 1.0, 0.5);
    const bvs::Trajectory traj = bvs::simulate_lg(theta, 100, 7);
    const bvs::ParticleModel model = bvs::ParticleModel::linear(theta);
    const auto n_particles = static_cast<bvs::Index>(state.range(0));
    const bvs::ParticleFilterResult filt = bvs::bootstrap_filter(model, traj.observations, n_particles, 8);
    for (auto _ : state) benchmark::DoNotOptimize(bvs::ffbsi(model, filt, 1000, 9).trajectories.data());
}
BENCHMARK(BM_Ffbsi)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
