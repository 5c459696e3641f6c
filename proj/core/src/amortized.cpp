#include "bvs/amortized.hpp"

#include <json.hpp>

namespace bvs {

UpdateMode parse_update_mode(std::string_view name) {
    if (name == "johnson") return UpdateMode::Johnson;
    if (name == "gated") return UpdateMode::Gated;
    throw ConfigError("unknown update mode '" + std::string(name) + "' (expected johnson or gated)");
}

std::string update_mode_name(UpdateMode mode) { return mode == UpdateMode::Johnson ? "johnson" : "gated"; }

Index AmortizedArchitecture::net_input_dim() const {
    return mode == UpdateMode::Johnson ? obs_dim : gaussian_param_dim() + obs_dim;
}

Index AmortizedArchitecture::net_output_dim() const {
    return mode == UpdateMode::Johnson ? 2 * state_dim : gaussian_param_dim();
}

std::vector<Index> AmortizedArchitecture::layer_dims() const {
    std::vector<Index> dims{net_input_dim()};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(net_output_dim());
    return dims;
}

std::string AmortizedArchitecture::to_json() const {
    nlohmann::json j;
    j["layer_dims"] = layer_dims();
    j["gate"] = mode == UpdateMode::Gated && gate;
    j["mode"] = update_mode_name(mode);
    j["state_dim"] = state_dim;
    j["obs_dim"] = obs_dim;
    return j.dump(2);
}

AmortizedArchitecture AmortizedArchitecture::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    AmortizedArchitecture a;
    a.mode = parse_update_mode(j.at("mode").get<std::string>());
    a.gate = j.value("gate", a.mode == UpdateMode::Gated);
    a.state_dim = j.at("state_dim").get<Index>();
    a.obs_dim = j.at("obs_dim").get<Index>();
    const auto dims = j.at("layer_dims").get<std::vector<Index>>();
    if (dims.size() < 2) throw ConfigError("layer_dims needs input and output sizes");
    a.hidden.assign(dims.begin() + 1, dims.end() - 1);
    if (a.layer_dims() != dims) throw ConfigError("layer_dims inconsistent with mode and dimensions");
    return a;
}

ParamLayout amortized_layout(const AmortizedArchitecture& arch) {
    const Index d = arch.state_dim;
    ParamLayout layout;
    layout.add("dyn.abar0", d, 1);
    layout.add("dyn.qbar0", d, d, ParamKind::LogCholesky);
    layout.add("dyn.abar", d, d);
    layout.add("dyn.qbar", d, d, ParamKind::LogCholesky);
    add_mlp_params(layout, "net", arch.layer_dims());
    if (arch.mode == UpdateMode::Gated && arch.gate) {
        layout.add("gate.W", arch.gaussian_param_dim(), arch.net_input_dim());
        layout.add("gate.b", arch.gaussian_param_dim(), 1);
    }
    return layout;
}

ParamVector init_amortized(const AmortizedArchitecture& arch, const VariationalDynamics& dyn, Rng& rng) {
    if (dyn.state_dim() != arch.state_dim) throw DimMismatch("initial dynamics dimension differs from architecture");
    ParamVector p;
    p.layout = amortized_layout(arch);
    p.resize_to_layout();
    p.set_matrix("dyn.abar0", dyn.abar0);
    p.set_spd("dyn.qbar0", dyn.qbar0);
    p.set_matrix("dyn.abar", dyn.abar);
    p.set_spd("dyn.qbar", dyn.qbar);
    write_mlp(p, "net", make_mlp(arch.layer_dims(), rng));
    if (arch.mode == UpdateMode::Gated && arch.gate) {
        p.set_matrix("gate.W", xavier_init(arch.gaussian_param_dim(), arch.net_input_dim(), rng));
        p.set_matrix("gate.b", normal_bias_init(arch.gaussian_param_dim(), rng));
    }
    return p;
}

FrozenNoise draw_frozen_noise(std::size_t steps, std::size_t n_samples, Index d, std::uint64_t seed) {
    Rng rng(seed);
    FrozenNoise noise(steps, std::vector<Vector>(n_samples, Vector(d)));
    for (auto& step : noise)
        for (auto& v : step)
            for (Index i = 0; i < d; ++i) v(i) = rng.normal();
    return noise;
}

}  // namespace bvs
