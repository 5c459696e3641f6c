#include "bvs/optim.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bvs {

using nlohmann::json;

OptimizerState OptimizerState::adam(std::size_t n, double lr, double beta1, double beta2, double eps) {
    OptimizerState s;
    s.method = OptimMethod::Adam;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

OptimizerState OptimizerState::sgd(std::size_t n, double lr) {
    OptimizerState s;
    s.method = OptimMethod::Sgd;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.lr = lr;
    return s;
}

namespace {

void check_shapes(const OptimizerState& state, const ParamVector& params, std::span<const double> grad) {
    if (grad.size() != params.values.size() || state.m.size() != params.values.size() ||
        state.v.size() != params.values.size())
        throw DimMismatch("optimizer state, parameters and gradient must have equal length");
    for (double g : grad)
        if (!std::isfinite(g)) throw NonFiniteValue("non-finite gradient passed to the optimizer");
}

}  // namespace

void adam_step(OptimizerState& state, ParamVector& params, std::span<const double> grad) {
    check_shapes(state, params, grad);
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < grad.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params.values[i] += state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    for (double x : params.values)
        if (!std::isfinite(x)) throw NonFiniteValue("parameters diverged after Adam step");
}

void sgd_step(OptimizerState& state, ParamVector& params, std::span<const double> grad) {
    check_shapes(state, params, grad);
    ++state.step;
    for (std::size_t i = 0; i < grad.size(); ++i) params.values[i] += state.lr * grad[i];
}

void clip_global_norm(std::vector<double>& grad, double max_norm) {
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0)
        for (double& g : grad) g *= max_norm / norm;
}

void optimizer_step(OptimizerState& state, ParamVector& params, std::span<const double> grad) {
    std::vector<double> g(grad.begin(), grad.end());
    if (state.clip_norm > 0.0) clip_global_norm(g, state.clip_norm);
    if (state.method == OptimMethod::Adam)
        adam_step(state, params, g);
    else
        sgd_step(state, params, g);
}

std::string checkpoint_to_json(const ParamVector& params, const OptimizerState& state) {
    json layout = json::array();
    for (const auto& e : params.layout.entries())
        layout.push_back({{"name", e.name},
                          {"offset", e.offset},
                          {"rows", e.rows},
                          {"cols", e.cols},
                          {"kind", e.kind == ParamKind::Free ? "free" : "log_cholesky"}});
    json doc = {
        {"layout", layout},
        {"values", params.values},
        {"optimizer",
         {{"method", state.method == OptimMethod::Adam ? "adam" : "sgd"},
          {"step", state.step},
          {"m", state.m},
          {"v", state.v},
          {"hyper",
           {{"lr", state.lr},
            {"beta1", state.beta1},
            {"beta2", state.beta2},
            {"eps", state.eps},
            {"clip_norm", state.clip_norm}}}}},
    };
    return doc.dump(2);
}

void checkpoint_from_json(const std::string& text, ParamVector& params, OptimizerState& state) {
    try {
        const json doc = json::parse(text);
        ParamLayout layout;
        for (const auto& e : doc.at("layout")) {
            const std::string kind = e.at("kind");
            const auto& added = layout.add(e.at("name"), e.at("rows"), e.at("cols"),
                                           kind == "free" ? ParamKind::Free : ParamKind::LogCholesky);
            if (added.offset != e.at("offset").get<std::size_t>())
                throw ConfigError("checkpoint layout offsets are inconsistent");
        }
        params.layout = layout;
        params.values = doc.at("values").get<std::vector<double>>();
        if (params.values.size() != layout.size()) throw ConfigError("checkpoint values do not cover the layout");
        const json& opt = doc.at("optimizer");
        state.method = opt.at("method") == "adam" ? OptimMethod::Adam : OptimMethod::Sgd;
        state.step = opt.at("step");
        state.m = opt.at("m").get<std::vector<double>>();
        state.v = opt.at("v").get<std::vector<double>>();
        const json& h = opt.at("hyper");
        state.lr = h.at("lr");
        state.beta1 = h.at("beta1");
        state.beta2 = h.at("beta2");
        state.eps = h.at("eps");
        state.clip_norm = h.value("clip_norm", 0.0);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const ParamVector& params, const OptimizerState& state) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(params, state) << '\n';
}

void load_checkpoint(const std::filesystem::path& path, ParamVector& params, OptimizerState& state) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read checkpoint " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    checkpoint_from_json(ss.str(), params, state);
}

}  // namespace bvs
