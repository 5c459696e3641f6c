#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bvs/amortized.hpp"
#include "bvs/optim.hpp"
#include "bvs/ssm.hpp"

namespace bvs {

struct OptimizerConfig {
    std::string method = "adam";
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 0.0;

    OptimizerState make_state(std::size_t n) const;
};

struct LinearConfig {
    LGParams theta = scalar_lg_params(0.0, 1.0, 0.9, 0.1, 1.0, 0.5);
    LGParams lambda_init = scalar_lg_params(0.5, 2.0, 0.5, 0.5, 0.5, 1.5);
    std::size_t n_train = 64;
    std::size_t n_train_sequences = 8;
    std::size_t epochs = 100;
    std::vector<std::size_t> stopping_epochs{60, 80, 100};
    std::size_t n_eval = 2000;
    std::size_t n_eval_sequences = 20;
    std::vector<std::size_t> prefixes{125, 250, 500, 1000, 2000};
    OptimizerConfig optimizer{};
    /// Checkpoint files consumed by eval-error; empty means the ones in the output directory.
    std::vector<std::filesystem::path> checkpoints;
};

struct DecoderConfig {
    /// "fixed" uses weight/bias below (d = m = 1); "random" draws a Xavier layer.
    std::string kind = "fixed";
    double weight = 2.0;
    double bias = 1.0;
    std::uint64_t seed = 1;
};

struct NonlinearConfig {
    LGParams dynamics = scalar_lg_params(0.0, 1.0, 0.9, 0.1, 1.0, 1.0);
    Index obs_dim = 1;
    DecoderConfig decoder{};
    double emission_r = 0.01;
    bool apply_cos = true;
    std::size_t n = 500;
    std::size_t n_sequences = 5;
    std::size_t n_train_sequences = 5;
    bool train_on_evaluation = false;
    std::size_t epochs = 200;
    std::size_t mc_samples = 8;
    std::vector<Index> hidden{16, 16};
    bool gate = true;
    VariationalDynamics dyn_init{Vector::Zero(1), Matrix::Identity(1, 1), Matrix::Constant(1, 1, 0.5),
                                 Matrix::Constant(1, 1, 0.5)};
    OptimizerConfig optimizer{"adam", 1e-3};
    std::size_t particles = 2000;
    std::size_t ffbsi_trajectories = 1000;
    std::vector<std::size_t> prefixes{100, 200, 300, 400, 500};
    std::vector<std::string> modes{"johnson", "gated"};
};

struct BoundConfig {
    std::size_t instances = 200;
    std::vector<Index> state_counts{2, 3, 4};
    std::size_t max_n = 30;
    Index symbols = 3;
    std::vector<double> kappas{1.0, 10.0, 100.0, 1000.0};
    /// "random" draws a bounded random table per step; "state_sum" uses h̃_k = x_k.
    std::string functional = "random";
    Index growth_states = 3;
    std::vector<std::size_t> growth_n{10, 20, 30, 40, 50, 60, 70, 80, 90, 100,
                                      120, 140, 160, 180, 200};
    double growth_epsilon = 0.1;
    std::size_t marginal_k = 5;
};

struct SimulateConfig {
    std::string model = "linear";
    std::size_t n = 64;
    std::size_t n_sequences = 1;
};

struct FfbsiConfig {
    std::string model = "nonlinear";
    std::size_t n = 100;
    std::size_t particles = 2000;
    std::size_t trajectories = 1000;
    std::optional<std::filesystem::path> trajectory;
};

struct ExperimentConfig {
    std::string experiment = "linear";
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::filesystem::path out_dir = "out";
    LinearConfig linear;
    NonlinearConfig nonlinear;
    BoundConfig bound;
    SimulateConfig simulate;
    FfbsiConfig ffbsi;

    /// Canonical JSON text of every field (defaults included).
    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    /// Throws ConfigError on counts < 1 or inconsistent shapes.
    void validate() const;
};

/// FNV-1a of the canonical config JSON, hex encoded.
std::string config_hash(const ExperimentConfig& config);

/// Version string baked in at build time.
std::string version_string();

struct RunRecord {
    std::string command;
    std::string config_hash;
    std::string version;
    double wall_time_seconds = 0.0;
    std::vector<double> epoch_elbo;
    std::vector<double> sequence_errors;
    std::vector<std::filesystem::path> files;
    bool success = true;

    /// Writes manifest.json listing every file with its size; throws if one is missing or empty.
    void write_manifest(const std::filesystem::path& out_dir) const;
};

/// Learnable linear-Gaussian λ as a flat vector (log-Cholesky covariances).
ParamLayout lg_layout(Index d, Index m);
ParamVector lg_to_params(const LGParams& p);

template <class T>
LGParamsT<T> lg_from_params(const ParamLayout& layout, std::span<const T> values) {
    return {read_vector<T>(layout, values, "a0"), read_matrix<T>(layout, values, "q0"),
            read_matrix<T>(layout, values, "a"),  read_matrix<T>(layout, values, "q"),
            read_matrix<T>(layout, values, "b"),  read_matrix<T>(layout, values, "r")};
}

LGParams lg_from_params(const ParamVector& p);

struct LinearTrainResult {
    std::vector<double> elbo;     ///< mean training ELBO, epochs 0..E
    std::vector<double> loglik;   ///< mean training log-likelihood under θ
    std::vector<std::pair<std::size_t, ParamVector>> checkpoints;
};

LinearTrainResult train_linear(const LinearConfig& cfg, std::uint64_t seed, const std::filesystem::path* out_dir);

struct LinearEvalRow {
    std::size_t checkpoint_epoch;
    std::size_t sequence_id;
    std::size_t n;
    double abs_error;
};

/// Additive error |q^λ h − φ^θ h| for h̃_k = x_k on prefixes of J fresh sequences.
std::vector<LinearEvalRow> evaluate_linear(const LinearConfig& cfg,
                                           const std::vector<std::pair<std::size_t, LGParams>>& lambdas,
                                           std::uint64_t seed, std::size_t threads,
                                           const std::filesystem::path* out_dir, RunRecord* record);

RunRecord run_linear_experiment(const ExperimentConfig& config);
RunRecord run_linear_evaluation(const ExperimentConfig& config);
RunRecord run_nonlinear_experiment(const ExperimentConfig& config);
RunRecord run_bound_verify(const ExperimentConfig& config);
RunRecord run_simulate(const ExperimentConfig& config);
RunRecord run_ffbsi(const ExperimentConfig& config);

/// Observation noise, decoder and dynamics of the nonlinear experiment.
NonlinearEmission make_emission(const NonlinearConfig& cfg);

/// Pearson correlation coefficient.
double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Least-squares slope of y on x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bvs
