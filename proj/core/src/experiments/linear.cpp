#include <algorithm>
#include <map>
#include <regex>

#include "bvs/autodiff.hpp"
#include "bvs/parallel.hpp"
#include "bvs/variational.hpp"
#include "common.hpp"

namespace bvs {

namespace {

std::vector<std::vector<Vector>> training_observations(const LinearConfig& cfg, std::uint64_t seed) {
    std::vector<std::vector<Vector>> ys;
    for (std::size_t j = 0; j < cfg.n_train_sequences; ++j)
        ys.push_back(simulate_lg(cfg.theta, cfg.n_train, detail::stream_seed(seed, detail::Stream::Train, j)).observations);
    return ys;
}

std::string checkpoint_name(std::size_t epoch) { return "checkpoint_epoch" + std::to_string(epoch) + ".json"; }

double norm_of(const Vector& v) { return v.size() == 1 ? std::abs(v(0)) : v.norm(); }

}  // namespace

LinearTrainResult train_linear(const LinearConfig& cfg, std::uint64_t seed, const std::filesystem::path* out_dir) {
    const auto ys = training_observations(cfg, seed);
    ParamVector params = lg_to_params(cfg.lambda_init);
    OptimizerState opt = cfg.optimizer.make_state(params.values.size());
    const LGParamsT<ad::Var> theta_v = cast_params<ad::Var>(cfg.theta);

    LinearTrainResult result;
    double loglik = 0.0;
    for (const auto& y : ys) loglik += kalman_filter(cfg.theta, y).loglik;
    loglik /= static_cast<double>(ys.size());

    auto record_epoch = [&](std::size_t epoch) {
        const LGParams lambda = lg_from_params(params);
        double elbo = 0.0;
        for (const auto& y : ys) elbo += elbo_closed_form(cfg.theta, lambda, y);
        result.elbo.push_back(elbo / static_cast<double>(ys.size()));
        result.loglik.push_back(loglik);
        if (std::find(cfg.stopping_epochs.begin(), cfg.stopping_epochs.end(), epoch) != cfg.stopping_epochs.end()) {
            result.checkpoints.emplace_back(epoch, params);
            if (out_dir) save_checkpoint(*out_dir / checkpoint_name(epoch), params, opt);
        }
    };

    record_epoch(0);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (const auto& y : ys) {
            ad::ValueAndGradient vg;
            try {
                vg = ad::forward_backward(
                    [&](std::span<const ad::Var> v) {
                        return elbo_closed_form(theta_v, lg_from_params<ad::Var>(params.layout, v), y);
                    },
                    params.values);
                optimizer_step(opt, params, vg.gradient);
            } catch (const NonFiniteValue&) {
                if (out_dir) save_checkpoint(*out_dir / "checkpoint_last_good.json", params, opt);
                throw;
            }
        }
        record_epoch(epoch);
    }
    return result;
}

std::vector<LinearEvalRow> evaluate_linear(const LinearConfig& cfg,
                                           const std::vector<std::pair<std::size_t, LGParams>>& lambdas,
                                           std::uint64_t seed, std::size_t threads,
                                           const std::filesystem::path* out_dir, RunRecord* record) {
    const std::size_t jn = cfg.n_eval_sequences;
    const AdditiveFunctional f = AdditiveFunctional::state_sum(cfg.theta.state_dim());
    std::vector<std::vector<LinearEvalRow>> rows(jn);
    // per sequence: marginal errors per checkpoint, and true-state accuracy of the exact smoother
    std::vector<std::vector<std::vector<double>>> marginal(jn);
    std::vector<std::pair<double, double>> accuracy(jn);

    parallel_for(jn, threads, [&](std::size_t j) {
        const Trajectory traj = simulate_lg(cfg.theta, cfg.n_eval, detail::stream_seed(seed, detail::Stream::Eval, j));
        for (std::size_t p : cfg.prefixes) {
            const std::vector<Vector> y(traj.observations.begin(), traj.observations.begin() + static_cast<long>(p) + 1);
            const ExactSmoother truth = exact_smoother(cfg.theta, y);
            const Vector exact = smoothed_additive(truth.smoothing, f);
            for (const auto& [epoch, lambda] : lambdas) {
                const Vector approx = variational_smoothed_additive(variational_from_model(lambda, y), f);
                rows[j].push_back({epoch, j, p, norm_of(approx - exact)});
            }
        }
        const ExactSmoother truth = exact_smoother(cfg.theta, traj.observations);
        const auto& tm = truth.smoothing.marginals;
        double mean = 0.0;
        std::vector<double> sq;
        for (std::size_t k = 0; k < tm.size(); ++k) {
            sq.push_back((tm[k].mean - traj.states[k]).squaredNorm());
            mean += sq.back();
        }
        mean /= static_cast<double>(sq.size());
        double var = 0.0;
        for (double s : sq) var += (s - mean) * (s - mean);
        accuracy[j] = {mean, var / static_cast<double>(sq.size())};
        for (const auto& [epoch, lambda] : lambdas) {
            const Smoothing vs = variational_smoothing(variational_from_model(lambda, traj.observations));
            std::vector<double> errs;
            for (std::size_t k = 0; k < tm.size(); ++k) errs.push_back(norm_of(vs.marginals[k].mean - tm[k].mean));
            marginal[j].push_back(std::move(errs));
        }
    });

    std::vector<LinearEvalRow> all;
    for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
    if (out_dir && record) {
        auto add = detail::open_csv(*out_dir, "additive_error.csv", "checkpoint_epoch,sequence_id,n,abs_error", *record);
        // checkpoint-major order
        for (const auto& [epoch, lambda] : lambdas)
            for (const auto& r : all)
                if (r.checkpoint_epoch == epoch)
                    add << r.checkpoint_epoch << ',' << r.sequence_id << ',' << r.n << ',' << r.abs_error << '\n';
        auto mar = detail::open_csv(*out_dir, "marginal_error.csv", "checkpoint_epoch,sequence_id,k,abs_error", *record);
        for (std::size_t c = 0; c < lambdas.size(); ++c)
            for (std::size_t j = 0; j < jn; ++j)
                for (std::size_t k = 0; k < marginal[j][c].size(); ++k)
                    mar << lambdas[c].first << ',' << j << ',' << k << ',' << marginal[j][c][k] << '\n';
        std::string header = "sequence_id,mean_sq_err_exact,var_sq_err_exact";
        for (const auto& [epoch, lambda] : lambdas) header += ",smooth_err_epoch" + std::to_string(epoch);
        auto tab = detail::open_csv(*out_dir, "linear_table.csv", header, *record);
        for (std::size_t j = 0; j < jn; ++j) {
            tab << j << ',' << accuracy[j].first << ',' << accuracy[j].second;
            for (const auto& [epoch, lambda] : lambdas)
                for (const auto& r : rows[j])
                    if (r.checkpoint_epoch == epoch && r.n == cfg.n_eval) tab << ',' << r.abs_error;
            tab << '\n';
        }
        for (const auto& r : all)
            if (!lambdas.empty() && r.checkpoint_epoch == lambdas.back().first && r.n == cfg.n_eval)
                record->sequence_errors.push_back(r.abs_error);
    }
    return all;
}

RunRecord run_linear_experiment(const ExperimentConfig& config) {
    detail::Stopwatch clock;
    RunRecord record = detail::start_record("train-linear", config);
    const auto& cfg = config.linear;
    std::filesystem::create_directories(config.out_dir);
    const LinearTrainResult train = train_linear(cfg, config.seed, &config.out_dir);
    for (const auto& [epoch, p] : train.checkpoints) record.files.push_back(checkpoint_name(epoch));
    {
        auto out = detail::open_csv(config.out_dir, "training_curve.csv", "epoch,elbo,loglik", record);
        for (std::size_t e = 0; e < train.elbo.size(); ++e)
            out << e << ',' << train.elbo[e] << ',' << train.loglik[e] << '\n';
    }
    record.epoch_elbo = train.elbo;
    std::vector<std::pair<std::size_t, LGParams>> lambdas;
    for (const auto& [epoch, p] : train.checkpoints) lambdas.emplace_back(epoch, lg_from_params(p));
    evaluate_linear(cfg, lambdas, config.seed, config.threads, &config.out_dir, &record);
    record.wall_time_seconds = clock.seconds();
    record.write_manifest(config.out_dir);
    return record;
}

RunRecord run_linear_evaluation(const ExperimentConfig& config) {
    detail::Stopwatch clock;
    RunRecord record = detail::start_record("eval-error", config);
    const auto& cfg = config.linear;
    std::vector<std::filesystem::path> paths = cfg.checkpoints;
    const std::regex pattern("checkpoint_epoch([0-9]+)\\.json");
    if (paths.empty() && std::filesystem::is_directory(config.out_dir))
        for (const auto& entry : std::filesystem::directory_iterator(config.out_dir))
            if (std::regex_match(entry.path().filename().string(), pattern)) paths.push_back(entry.path());
    if (paths.empty()) throw ConfigError("no checkpoints to evaluate (run train-linear first or set linear.checkpoints)");
    std::map<std::size_t, LGParams> by_epoch;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        ParamVector p;
        OptimizerState s;
        load_checkpoint(paths[i], p, s);
        if (!(p.layout == lg_layout(cfg.theta.state_dim(), cfg.theta.obs_dim())))
            throw ConfigError(paths[i].string() + " is not a linear-Gaussian checkpoint");
        std::smatch m;
        const std::string name = paths[i].filename().string();
        const std::size_t epoch = std::regex_match(name, m, pattern) ? std::stoul(m[1].str()) : i;
        by_epoch[epoch] = lg_from_params(p);
    }
    std::vector<std::pair<std::size_t, LGParams>> lambdas(by_epoch.begin(), by_epoch.end());
    evaluate_linear(cfg, lambdas, config.seed, config.threads, &config.out_dir, &record);
    record.wall_time_seconds = clock.seconds();
    record.write_manifest(config.out_dir);
    return record;
}

}  // namespace bvs
