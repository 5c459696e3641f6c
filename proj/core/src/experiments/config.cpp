#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "bvs/experiments.hpp"

namespace bvs {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

/// Accepts a number (1×1) or nested arrays.
Matrix matrix_from_json(const json& j, const std::string& what) {
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a number or a nested array");
    if (j.front().is_number()) {
        Matrix m(1, static_cast<Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) m(0, static_cast<Index>(i)) = j[i].get<double>();
        return m;
    }
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j.front().size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw ConfigError(what + ": ragged matrix");
        for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

Vector vector_from_json(const json& j, const std::string& what) {
    if (j.is_number()) return Vector::Constant(1, j.get<double>());
    if (!j.is_array()) throw ConfigError(what + ": expected a number or an array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
    return v;
}

json lg_to_json(const LGParams& p) {
    return {{"a0", vector_to_json(p.a0)}, {"q0", matrix_to_json(p.q0)}, {"a", matrix_to_json(p.a)},
            {"q", matrix_to_json(p.q)},   {"b", matrix_to_json(p.b)},   {"r", matrix_to_json(p.r)}};
}

LGParams lg_from_json(const json& j, const LGParams& fallback, const std::string& what) {
    LGParams p = fallback;
    if (j.contains("a0")) p.a0 = vector_from_json(j["a0"], what + ".a0");
    if (j.contains("q0")) p.q0 = matrix_from_json(j["q0"], what + ".q0");
    if (j.contains("a")) p.a = matrix_from_json(j["a"], what + ".a");
    if (j.contains("q")) p.q = matrix_from_json(j["q"], what + ".q");
    if (j.contains("b")) p.b = matrix_from_json(j["b"], what + ".b");
    if (j.contains("r")) p.r = matrix_from_json(j["r"], what + ".r");
    try {
        validate(p);
    } catch (const Error& e) {
        throw ConfigError(what + ": " + e.what());
    }
    return p;
}

json optimizer_to_json(const OptimizerConfig& o) {
    return {{"method", o.method}, {"lr", o.lr},   {"beta1", o.beta1},
            {"beta2", o.beta2},   {"eps", o.eps}, {"clip_norm", o.clip_norm}};
}

OptimizerConfig optimizer_from_json(const json& j, OptimizerConfig o) {
    o.method = j.value("method", o.method);
    o.lr = j.value("lr", o.lr);
    o.beta1 = j.value("beta1", o.beta1);
    o.beta2 = j.value("beta2", o.beta2);
    o.eps = j.value("eps", o.eps);
    o.clip_norm = j.value("clip_norm", o.clip_norm);
    if (o.method != "adam" && o.method != "sgd") throw ConfigError("optimizer.method must be adam or sgd");
    return o;
}

json kappa_to_json(double k) { return std::isinf(k) ? json("inf") : json(k); }

double kappa_from_json(const json& j) {
    if (j.is_string() && j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

template <class V>
void read_field(const json& j, const char* key, V& target) {
    if (j.contains(key)) target = j.at(key).get<V>();
}

}  // namespace

OptimizerState OptimizerConfig::make_state(std::size_t n) const {
    OptimizerState s = method == "sgd" ? OptimizerState::sgd(n, lr) : OptimizerState::adam(n, lr, beta1, beta2, eps);
    s.clip_norm = clip_norm;
    return s;
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["experiment"] = experiment;
    j["seed"] = seed;
    j["threads"] = threads;
    j["out_dir"] = out_dir.string();

    json lin;
    lin["theta"] = lg_to_json(linear.theta);
    lin["lambda_init"] = lg_to_json(linear.lambda_init);
    lin["n_train"] = linear.n_train;
    lin["n_train_sequences"] = linear.n_train_sequences;
    lin["epochs"] = linear.epochs;
    lin["stopping_epochs"] = linear.stopping_epochs;
    lin["n_eval"] = linear.n_eval;
    lin["n_eval_sequences"] = linear.n_eval_sequences;
    lin["prefixes"] = linear.prefixes;
    lin["optimizer"] = optimizer_to_json(linear.optimizer);
    json cps = json::array();
    for (const auto& p : linear.checkpoints) cps.push_back(p.string());
    lin["checkpoints"] = cps;
    j["linear"] = lin;

    json nl;
    nl["dynamics"] = lg_to_json(nonlinear.dynamics);
    nl["obs_dim"] = nonlinear.obs_dim;
    nl["decoder"] = {{"kind", nonlinear.decoder.kind},
                     {"weight", nonlinear.decoder.weight},
                     {"bias", nonlinear.decoder.bias},
                     {"seed", nonlinear.decoder.seed}};
    nl["emission_r"] = nonlinear.emission_r;
    nl["apply_cos"] = nonlinear.apply_cos;
    nl["n"] = nonlinear.n;
    nl["n_sequences"] = nonlinear.n_sequences;
    nl["n_train_sequences"] = nonlinear.n_train_sequences;
    nl["train_on_evaluation"] = nonlinear.train_on_evaluation;
    nl["epochs"] = nonlinear.epochs;
    nl["mc_samples"] = nonlinear.mc_samples;
    nl["hidden"] = nonlinear.hidden;
    nl["gate"] = nonlinear.gate;
    nl["dyn_init"] = {{"abar0", vector_to_json(nonlinear.dyn_init.abar0)},
                      {"qbar0", matrix_to_json(nonlinear.dyn_init.qbar0)},
                      {"abar", matrix_to_json(nonlinear.dyn_init.abar)},
                      {"qbar", matrix_to_json(nonlinear.dyn_init.qbar)}};
    nl["optimizer"] = optimizer_to_json(nonlinear.optimizer);
    nl["particles"] = nonlinear.particles;
    nl["ffbsi_trajectories"] = nonlinear.ffbsi_trajectories;
    nl["prefixes"] = nonlinear.prefixes;
    nl["modes"] = nonlinear.modes;
    j["nonlinear"] = nl;

    json bd;
    bd["instances"] = bound.instances;
    bd["state_counts"] = bound.state_counts;
    bd["max_n"] = bound.max_n;
    bd["symbols"] = bound.symbols;
    json ks = json::array();
    for (double k : bound.kappas) ks.push_back(kappa_to_json(k));
    bd["kappas"] = ks;
    bd["functional"] = bound.functional;
    bd["growth_states"] = bound.growth_states;
    bd["growth_n"] = bound.growth_n;
    bd["growth_epsilon"] = bound.growth_epsilon;
    bd["marginal_k"] = bound.marginal_k;
    j["bound"] = bd;

    j["simulate"] = {{"model", simulate.model}, {"n", simulate.n}, {"n_sequences", simulate.n_sequences}};
    json ff = {{"model", ffbsi.model}, {"n", ffbsi.n}, {"particles", ffbsi.particles},
               {"trajectories", ffbsi.trajectories}};
    ff["trajectory"] = ffbsi.trajectory ? json(ffbsi.trajectory->string()) : json(nullptr);
    j["ffbsi"] = ff;
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");
    ExperimentConfig c;
    try {
        read_field(j, "experiment", c.experiment);
        read_field(j, "seed", c.seed);
        read_field(j, "threads", c.threads);
        if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();

        if (j.contains("linear")) {
            const json& l = j["linear"];
            auto& lc = c.linear;
            if (l.contains("theta")) lc.theta = lg_from_json(l["theta"], lc.theta, "linear.theta");
            if (l.contains("lambda_init"))
                lc.lambda_init = lg_from_json(l["lambda_init"], lc.lambda_init, "linear.lambda_init");
            read_field(l, "n_train", lc.n_train);
            read_field(l, "n_train_sequences", lc.n_train_sequences);
            read_field(l, "epochs", lc.epochs);
            read_field(l, "stopping_epochs", lc.stopping_epochs);
            read_field(l, "n_eval", lc.n_eval);
            read_field(l, "n_eval_sequences", lc.n_eval_sequences);
            read_field(l, "prefixes", lc.prefixes);
            if (l.contains("optimizer")) lc.optimizer = optimizer_from_json(l["optimizer"], lc.optimizer);
            if (l.contains("checkpoints"))
                for (const auto& p : l["checkpoints"]) lc.checkpoints.emplace_back(p.get<std::string>());
        }
        if (j.contains("nonlinear")) {
            const json& n = j["nonlinear"];
            auto& nc = c.nonlinear;
            if (n.contains("dynamics")) nc.dynamics = lg_from_json(n["dynamics"], nc.dynamics, "nonlinear.dynamics");
            read_field(n, "obs_dim", nc.obs_dim);
            if (n.contains("decoder")) {
                const json& d = n["decoder"];
                read_field(d, "kind", nc.decoder.kind);
                read_field(d, "weight", nc.decoder.weight);
                read_field(d, "bias", nc.decoder.bias);
                read_field(d, "seed", nc.decoder.seed);
            }
            read_field(n, "emission_r", nc.emission_r);
            read_field(n, "apply_cos", nc.apply_cos);
            read_field(n, "n", nc.n);
            read_field(n, "n_sequences", nc.n_sequences);
            read_field(n, "n_train_sequences", nc.n_train_sequences);
            read_field(n, "train_on_evaluation", nc.train_on_evaluation);
            read_field(n, "epochs", nc.epochs);
            read_field(n, "mc_samples", nc.mc_samples);
            read_field(n, "hidden", nc.hidden);
            read_field(n, "gate", nc.gate);
            if (n.contains("dyn_init")) {
                const json& d = n["dyn_init"];
                if (d.contains("abar0")) nc.dyn_init.abar0 = vector_from_json(d["abar0"], "dyn_init.abar0");
                if (d.contains("qbar0")) nc.dyn_init.qbar0 = matrix_from_json(d["qbar0"], "dyn_init.qbar0");
                if (d.contains("abar")) nc.dyn_init.abar = matrix_from_json(d["abar"], "dyn_init.abar");
                if (d.contains("qbar")) nc.dyn_init.qbar = matrix_from_json(d["qbar"], "dyn_init.qbar");
            }
            if (n.contains("optimizer")) nc.optimizer = optimizer_from_json(n["optimizer"], nc.optimizer);
            read_field(n, "particles", nc.particles);
            read_field(n, "ffbsi_trajectories", nc.ffbsi_trajectories);
            read_field(n, "prefixes", nc.prefixes);
            read_field(n, "modes", nc.modes);
        }
        if (j.contains("bound")) {
            const json& b = j["bound"];
            auto& bc = c.bound;
            read_field(b, "instances", bc.instances);
            read_field(b, "state_counts", bc.state_counts);
            read_field(b, "max_n", bc.max_n);
            read_field(b, "symbols", bc.symbols);
            if (b.contains("kappas")) {
                bc.kappas.clear();
                for (const auto& k : b["kappas"]) bc.kappas.push_back(kappa_from_json(k));
            }
            read_field(b, "functional", bc.functional);
            read_field(b, "growth_states", bc.growth_states);
            read_field(b, "growth_n", bc.growth_n);
            read_field(b, "growth_epsilon", bc.growth_epsilon);
            read_field(b, "marginal_k", bc.marginal_k);
        }
        if (j.contains("simulate")) {
            const json& s = j["simulate"];
            read_field(s, "model", c.simulate.model);
            read_field(s, "n", c.simulate.n);
            read_field(s, "n_sequences", c.simulate.n_sequences);
        }
        if (j.contains("ffbsi")) {
            const json& f = j["ffbsi"];
            read_field(f, "model", c.ffbsi.model);
            read_field(f, "n", c.ffbsi.n);
            read_field(f, "particles", c.ffbsi.particles);
            read_field(f, "trajectories", c.ffbsi.trajectories);
            if (f.contains("trajectory") && !f["trajectory"].is_null())
                c.ffbsi.trajectory = f["trajectory"].get<std::string>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config field: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void ExperimentConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v < 1) throw ConfigError(std::string(name) + " must be at least 1");
    };
    if (experiment != "linear" && experiment != "nonlinear" && experiment != "bound-verify")
        throw ConfigError("experiment must be linear, nonlinear or bound-verify");
    positive(linear.n_train, "linear.n_train");
    positive(linear.n_train_sequences, "linear.n_train_sequences");
    positive(linear.n_eval, "linear.n_eval");
    positive(linear.n_eval_sequences, "linear.n_eval_sequences");
    for (std::size_t e : linear.stopping_epochs)
        if (e > linear.epochs) throw ConfigError("linear.stopping_epochs exceed linear.epochs");
    for (std::size_t p : linear.prefixes)
        if (p < 1 || p > linear.n_eval) throw ConfigError("linear.prefixes must lie in [1, n_eval]");
    if (linear.lambda_init.state_dim() != linear.theta.state_dim() ||
        linear.lambda_init.obs_dim() != linear.theta.obs_dim())
        throw ConfigError("linear.lambda_init dimensions differ from linear.theta");

    positive(nonlinear.n, "nonlinear.n");
    positive(nonlinear.n_sequences, "nonlinear.n_sequences");
    positive(nonlinear.mc_samples, "nonlinear.mc_samples");
    positive(nonlinear.particles, "nonlinear.particles");
    positive(nonlinear.ffbsi_trajectories, "nonlinear.ffbsi_trajectories");
    if (!nonlinear.train_on_evaluation) positive(nonlinear.n_train_sequences, "nonlinear.n_train_sequences");
    if (!(nonlinear.emission_r > 0.0)) throw ConfigError("nonlinear.emission_r must be positive");
    if (nonlinear.decoder.kind != "fixed" && nonlinear.decoder.kind != "random")
        throw ConfigError("nonlinear.decoder.kind must be fixed or random");
    if (nonlinear.decoder.kind == "fixed" && (nonlinear.dynamics.state_dim() != 1 || nonlinear.obs_dim != 1))
        throw ConfigError("fixed decoder requires d = m = 1");
    if (nonlinear.dyn_init.state_dim() != nonlinear.dynamics.state_dim())
        throw ConfigError("nonlinear.dyn_init dimension differs from the dynamics");
    for (const auto& m : nonlinear.modes) parse_update_mode(m);
    for (std::size_t p : nonlinear.prefixes)
        if (p < 1 || p > nonlinear.n) throw ConfigError("nonlinear.prefixes must lie in [1, n]");

    positive(bound.instances, "bound.instances");
    positive(bound.max_n, "bound.max_n");
    if (bound.state_counts.empty() || bound.kappas.empty()) throw ConfigError("bound grid is empty");
    for (Index s : bound.state_counts)
        if (s < 2) throw ConfigError("bound.state_counts entries must be at least 2");
    for (double k : bound.kappas)
        if (!(k > 0.0)) throw ConfigError("bound.kappas must be positive");
    if (bound.functional != "random" && bound.functional != "state_sum")
        throw ConfigError("bound.functional must be random or state_sum");
    if (bound.growth_epsilon < 0.0 || bound.growth_epsilon >= 1.0)
        throw ConfigError("bound.growth_epsilon must lie in [0, 1)");
    for (std::size_t n : bound.growth_n)
        if (n <= bound.marginal_k) throw ConfigError("bound.growth_n entries must exceed marginal_k");

    if (simulate.model != "linear" && simulate.model != "nonlinear")
        throw ConfigError("simulate.model must be linear or nonlinear");
    positive(simulate.n_sequences, "simulate.n_sequences");
    if (ffbsi.model != "linear" && ffbsi.model != "nonlinear")
        throw ConfigError("ffbsi.model must be linear or nonlinear");
    positive(ffbsi.particles, "ffbsi.particles");
    positive(ffbsi.trajectories, "ffbsi.trajectories");
}

std::string config_hash(const ExperimentConfig& config) {
    // out_dir and threads do not change results
    json j = json::parse(config.to_json());
    j.erase("out_dir");
    j.erase("threads");
    const std::string text = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

std::string version_string() {
#ifdef BVS_VERSION
    return BVS_VERSION;
#else
    return "unknown";
#endif
}

}  // namespace bvs
