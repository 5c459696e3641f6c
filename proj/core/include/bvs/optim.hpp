#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bvs/params.hpp"

namespace bvs {

enum class OptimMethod { Adam, Sgd };

/// First-order optimizer state. Updates use the ascent convention: the
/// objective (an ELBO) is maximized.
struct OptimizerState {
    OptimMethod method = OptimMethod::Adam;
    std::size_t step = 0;
    std::vector<double> m;
    std::vector<double> v;
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Global-norm gradient clipping threshold; 0 disables clipping.
    double clip_norm = 0.0;

    static OptimizerState adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                               double eps = 1e-8);
    static OptimizerState sgd(std::size_t n, double lr);
};

void adam_step(OptimizerState& state, ParamVector& params, std::span<const double> grad);
void sgd_step(OptimizerState& state, ParamVector& params, std::span<const double> grad);

/// Dispatches on state.method after optional clipping.
void optimizer_step(OptimizerState& state, ParamVector& params, std::span<const double> grad);

/// Rescales grad in place so its Euclidean norm is at most max_norm.
void clip_global_norm(std::vector<double>& grad, double max_norm);

std::string checkpoint_to_json(const ParamVector& params, const OptimizerState& state);
void checkpoint_from_json(const std::string& text, ParamVector& params, OptimizerState& state);

void save_checkpoint(const std::filesystem::path& path, const ParamVector& params, const OptimizerState& state);
void load_checkpoint(const std::filesystem::path& path, ParamVector& params, OptimizerState& state);

}  // namespace bvs
