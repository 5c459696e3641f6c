#include <cmath>
#include <iostream>
#include <limits>

#include "bvs/autodiff.hpp"
#include "bvs/ffbsi.hpp"
#include "bvs/parallel.hpp"
#include "common.hpp"

namespace bvs {

namespace {

struct TrainedModel {
    AmortizedArchitecture arch;
    ParamVector params;
    OptimizerState opt;
    std::vector<double> epoch_elbo;
};

TrainedModel train_amortized(const NonlinearConfig& cfg, const NonlinearEmission& emission, UpdateMode mode,
                             const std::vector<std::vector<Vector>>& ys, std::uint64_t seed, std::size_t mode_index) {
    TrainedModel t;
    t.arch.mode = mode;
    t.arch.state_dim = cfg.dynamics.state_dim();
    t.arch.obs_dim = cfg.obs_dim;
    t.arch.hidden = cfg.hidden;
    t.arch.gate = cfg.gate;
    Rng rng(detail::stream_seed(seed, detail::Stream::Init, mode_index));
    t.params = init_amortized(t.arch, cfg.dyn_init, rng);
    t.opt = cfg.optimizer.make_state(t.params.values.size());
    const std::uint64_t steps_per_epoch = ys.size();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double total = 0.0;
        for (std::size_t j = 0; j < ys.size(); ++j) {
            const std::uint64_t step = epoch * steps_per_epoch + j;
            const FrozenNoise noise =
                draw_frozen_noise(ys[j].size(), cfg.mc_samples, t.arch.state_dim,
                                  detail::stream_seed(seed, detail::Stream::Noise, step * 8 + mode_index));
            const ad::ValueAndGradient vg = ad::forward_backward(
                [&](std::span<const ad::Var> v) {
                    const AmortizedModelT<ad::Var> model = read_amortized<ad::Var>(t.arch, t.params.layout, v);
                    return mc_elbo_nonlinear(cfg.dynamics, emission, amortized_recursion(model, ys[j]), ys[j], noise);
                },
                t.params.values);
            optimizer_step(t.opt, t.params, vg.gradient);
            total += vg.value;
        }
        t.epoch_elbo.push_back(total / static_cast<double>(ys.size()));
    }
    return t;
}

double variational_state_sum(const AmortizedArchitecture& arch, const ParamVector& params,
                             const std::vector<Vector>& y) {
    const AmortizedModel model = read_amortized<double>(arch, params.layout, std::span<const double>(params.values));
    const BackwardVariational q = amortized_recursion(model, y);
    return variational_smoothed_additive(q, AdditiveFunctional::state_sum(arch.state_dim)).sum();
}

struct SequenceReference {
    std::vector<double> prefix_values;  ///< FFBSi state-sum estimate per prefix
    double mean_err = std::numeric_limits<double>::quiet_NaN();
    double var_err = std::numeric_limits<double>::quiet_NaN();
    bool collapsed = false;
};

SequenceReference ffbsi_reference(const NonlinearConfig& cfg, const ParticleModel& pm, const Trajectory& traj,
                                  std::uint64_t seed, std::size_t j) {
    SequenceReference ref;
    try {
        const ParticleFilterResult filt =
            bootstrap_filter(pm, traj.observations, static_cast<Index>(cfg.particles),
                             detail::stream_seed(seed, detail::Stream::Ffbsi, 1000 * j));
        const AdditiveFunctional f = AdditiveFunctional::state_sum(pm.dynamics.state_dim());
        for (std::size_t pi = 0; pi < cfg.prefixes.size(); ++pi) {
            const std::size_t p = cfg.prefixes[pi];
            ParticleFilterResult sub;
            sub.sets.assign(filt.sets.begin(), filt.sets.begin() + static_cast<long>(p) + 1);
            const SmoothingSample s = ffbsi(pm, sub, cfg.ffbsi_trajectories,
                                            detail::stream_seed(seed, detail::Stream::Ffbsi, 1000 * j + 1 + pi));
            ref.prefix_values.push_back(ffbsi_additive(s, f).mean.sum());
            if (p == cfg.n) {
                const auto means = s.marginal_means();
                std::vector<double> sq;
                double mean = 0.0;
                for (std::size_t k = 0; k < means.size(); ++k) {
                    sq.push_back((means[k] - traj.states[k]).squaredNorm());
                    mean += sq.back();
                }
                mean /= static_cast<double>(sq.size());
                double var = 0.0;
                for (double v : sq) var += (v - mean) * (v - mean);
                ref.mean_err = mean;
                ref.var_err = var / static_cast<double>(sq.size());
            }
        }
    } catch (const WeightCollapse& e) {
        std::cerr << "sequence " << j << ": " << e.what() << '\n';
        ref.collapsed = true;
        ref.prefix_values.assign(cfg.prefixes.size(), std::numeric_limits<double>::quiet_NaN());
    }
    return ref;
}

}  // namespace

RunRecord run_nonlinear_experiment(const ExperimentConfig& config) {
    detail::Stopwatch clock;
    RunRecord record = detail::start_record("train-nonlinear", config);
    const NonlinearConfig& cfg = config.nonlinear;
    const NonlinearEmission emission = make_emission(cfg);
    std::filesystem::create_directories(config.out_dir);

    std::vector<Trajectory> eval(cfg.n_sequences);
    for (std::size_t j = 0; j < cfg.n_sequences; ++j)
        eval[j] = simulate_nonlinear(cfg.dynamics, emission, cfg.n, detail::stream_seed(config.seed, detail::Stream::Eval, j));
    std::vector<std::vector<Vector>> train_ys;
    if (cfg.train_on_evaluation)
        for (const auto& t : eval) train_ys.push_back(t.observations);
    for (std::size_t j = 0; j < cfg.n_train_sequences; ++j)
        train_ys.push_back(simulate_nonlinear(cfg.dynamics, emission, cfg.n,
                                              detail::stream_seed(config.seed, detail::Stream::Train, j))
                               .observations);

    // Tasks: one per variational mode, one per FFBSi reference.
    const std::size_t n_modes = cfg.modes.size();
    std::vector<TrainedModel> models(n_modes);
    std::vector<SequenceReference> refs(cfg.n_sequences);
    const ParticleModel pm = ParticleModel::nonlinear(cfg.dynamics, emission);
    parallel_for(n_modes + cfg.n_sequences, config.threads, [&](std::size_t task) {
        if (task < n_modes)
            models[task] = train_amortized(cfg, emission, parse_update_mode(cfg.modes[task]), train_ys, config.seed, task);
        else
            refs[task - n_modes] = ffbsi_reference(cfg, pm, eval[task - n_modes], config.seed, task - n_modes);
    });

    for (std::size_t m = 0; m < n_modes; ++m) {
        const std::string name = "model_" + cfg.modes[m] + ".json";
        save_checkpoint(config.out_dir / name, models[m].params, models[m].opt);
        record.files.push_back(name);
        const std::string arch_name = "architecture_" + cfg.modes[m] + ".json";
        std::ofstream(config.out_dir / arch_name) << models[m].arch.to_json() << '\n';
        record.files.push_back(arch_name);
    }
    {
        auto out = detail::open_csv(config.out_dir, "nonlinear_training.csv", "method,epoch,elbo", record);
        for (std::size_t m = 0; m < n_modes; ++m)
            for (std::size_t e = 0; e < models[m].epoch_elbo.size(); ++e)
                out << cfg.modes[m] << ',' << e + 1 << ',' << models[m].epoch_elbo[e] << '\n';
    }
    if (n_modes > 0) record.epoch_elbo = models.back().epoch_elbo;

    // errors[m][j][prefix]
    std::vector<std::vector<std::vector<double>>> errors(n_modes, std::vector<std::vector<double>>(cfg.n_sequences));
    parallel_for(n_modes * cfg.n_sequences, config.threads, [&](std::size_t task) {
        const std::size_t m = task / cfg.n_sequences;
        const std::size_t j = task % cfg.n_sequences;
        for (std::size_t pi = 0; pi < cfg.prefixes.size(); ++pi) {
            const std::size_t p = cfg.prefixes[pi];
            const std::vector<Vector> y(eval[j].observations.begin(), eval[j].observations.begin() + static_cast<long>(p) + 1);
            const double v = variational_state_sum(models[m].arch, models[m].params, y);
            errors[m][j].push_back(std::abs(v - refs[j].prefix_values[pi]));
        }
    });
    {
        auto out = detail::open_csv(config.out_dir, "errors_vs_n.csv", "method,sequence_id,n,abs_error", record);
        for (std::size_t m = 0; m < n_modes; ++m)
            for (std::size_t j = 0; j < cfg.n_sequences; ++j)
                for (std::size_t pi = 0; pi < cfg.prefixes.size(); ++pi)
                    out << cfg.modes[m] << ',' << j << ',' << cfg.prefixes[pi] << ',' << errors[m][j][pi] << '\n';
    }
    {
        auto final_error = [&](const std::string& mode, std::size_t j) {
            for (std::size_t m = 0; m < n_modes; ++m)
                if (cfg.modes[m] == mode) {
                    for (std::size_t pi = 0; pi < cfg.prefixes.size(); ++pi)
                        if (cfg.prefixes[pi] == cfg.n) return errors[m][j][pi];
                }
            return std::numeric_limits<double>::quiet_NaN();
        };
        auto out = detail::open_csv(config.out_dir, "final_table.csv",
                                    "sequence_id,mean_err_ref,var_err_ref,smooth_err_johnson,smooth_err_gated", record);
        for (std::size_t j = 0; j < cfg.n_sequences; ++j) {
            out << j << ',' << refs[j].mean_err << ',' << refs[j].var_err << ',' << final_error("johnson", j) << ','
                << final_error("gated", j) << '\n';
            record.sequence_errors.push_back(final_error("gated", j));
            if (refs[j].collapsed) record.success = false;
        }
    }
    for (std::size_t j = 0; j < cfg.n_sequences; ++j) {
        const std::string name = "trajectory_" + std::to_string(j) + ".csv";
        write_trajectory_csv(config.out_dir / name, eval[j]);
        record.files.push_back(name);
    }
    record.wall_time_seconds = clock.seconds();
    record.write_manifest(config.out_dir);
    return record;
}

}  // namespace bvs
