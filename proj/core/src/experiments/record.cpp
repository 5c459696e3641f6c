#include <cmath>
#include <fstream>

#include <json.hpp>

#include "bvs/experiments.hpp"

namespace bvs {

void RunRecord::write_manifest(const std::filesystem::path& out_dir) const {
    nlohmann::json files_json = nlohmann::json::array();
    for (const auto& f : files) {
        const std::filesystem::path p = out_dir / f;
        if (!std::filesystem::exists(p)) throw ConfigError("manifest lists missing file " + p.string());
        const auto size = std::filesystem::file_size(p);
        if (size == 0) throw ConfigError("manifest lists empty file " + p.string());
        files_json.push_back({{"path", f.generic_string()}, {"bytes", size}});
    }
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["wall_time_seconds"] = wall_time_seconds;
    j["epoch_elbo"] = epoch_elbo;
    j["sequence_errors"] = sequence_errors;
    j["success"] = success;
    j["files"] = files_json;
    std::ofstream out(out_dir / "manifest.json");
    if (!out) throw ConfigError("cannot write manifest in " + out_dir.string());
    out << j.dump(2) << '\n';
}

ParamLayout lg_layout(Index d, Index m) {
    ParamLayout layout;
    layout.add("a0", d, 1);
    layout.add("q0", d, d, ParamKind::LogCholesky);
    layout.add("a", d, d);
    layout.add("q", d, d, ParamKind::LogCholesky);
    layout.add("b", m, d);
    layout.add("r", m, m, ParamKind::LogCholesky);
    return layout;
}

ParamVector lg_to_params(const LGParams& p) {
    validate(p);
    ParamVector v;
    v.layout = lg_layout(p.state_dim(), p.obs_dim());
    v.resize_to_layout();
    v.set_matrix("a0", p.a0);
    v.set_spd("q0", p.q0);
    v.set_matrix("a", p.a);
    v.set_spd("q", p.q);
    v.set_matrix("b", p.b);
    v.set_spd("r", p.r);
    return v;
}

LGParams lg_from_params(const ParamVector& p) {
    return lg_from_params<double>(p.layout, std::span<const double>(p.values));
}

NonlinearEmission make_emission(const NonlinearConfig& cfg) {
    const Index d = cfg.dynamics.state_dim();
    const Matrix r = Matrix::Identity(cfg.obs_dim, cfg.obs_dim) * cfg.emission_r;
    if (cfg.decoder.kind == "random") {
        Rng rng(cfg.decoder.seed);
        return make_noninjective_emission(d, cfg.obs_dim, r, rng, cfg.apply_cos);
    }
    NonlinearEmission e;
    e.decoder.hidden = Activation::Tanh;
    e.decoder.output = Activation::Tanh;
    e.decoder.layers.push_back({Matrix::Constant(1, 1, cfg.decoder.weight), Vector::Constant(1, cfg.decoder.bias)});
    e.apply_cos = cfg.apply_cos;
    e.r = r;
    return e;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw LengthMismatch("pearson needs two equal-length samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw LengthMismatch("slope needs two equal-length samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw InvalidArgument("slope of a constant abscissa");
    return sxy / sxx;
}

}  // namespace bvs
