#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bvs/discrete.hpp"
#include "bvs/experiments.hpp"
#include "bvs/ffbsi.hpp"
#include "bvs/kalman.hpp"
#include "bvs/variational.hpp"
#include "oracles.hpp"

using namespace bvs;
namespace fs = std::filesystem;
using ad::Var;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

using Table = std::vector<std::map<std::string, std::string>>;

Table read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    Table rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; std::getline(ss, cell, ','); ++i) row[header.at(i)] = cell;
        rows.push_back(std::move(row));
    }
    return rows;
}

double num(const std::map<std::string, std::string>& row, const std::string& key) { return std::stod(row.at(key)); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bvs_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

Outcome exactness_gate() {
    const auto t0 = Clock::now();
    Rng rng(101);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Index d = 1 + i % 3;
        const LGParams theta = oracle::random_lg(d, 1 + i % 2, rng);
        const Trajectory t = simulate_lg(theta, 64, 200 + static_cast<std::uint64_t>(i));
        const double ll = kalman_filter(theta, t.observations).loglik;
        worst = std::max(worst, std::abs(elbo_closed_form(theta, theta, t.observations) - ll) / std::abs(ll));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-8 && secs < 10.0,
            "max rel |ELBO(theta,theta) - loglik| = " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome recursion_gate() {
    const auto t0 = Clock::now();
    Rng rng(102);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Index d = 1 + i % 3;
        const Index m = 1 + (i / 3) % 2;
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 64.0);
        const LGParams theta = oracle::random_lg(d, m, rng);
        const LGParams lambda = oracle::random_lg(d, m, rng);
        const Trajectory t = simulate_lg(theta, std::min<std::size_t>(n, 64), 300 + static_cast<std::uint64_t>(i));
        const BackwardVariational q = variational_from_model(lambda, t.observations);
        const double closed = elbo_closed_form(theta, q, t.observations);
        const double rec = elbo_recursive(theta, q, t.observations).elbo;
        worst = std::max(worst, std::abs(rec - closed) / std::max(1.0, std::abs(closed)));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-8 && secs < 30.0,
            "max rel |recursive - closed form| = " + fmt("%.2e", worst) + " over 100 instances, " + fmt("%.2f", secs) +
                " s"};
}

Outcome oracle_gate() {
    Rng rng(103);
    double gauss = 0.0;
    for (int i = 0; i < 12; ++i) {
        const Index d = 1 + i % 3;
        const std::size_t n = 8 + static_cast<std::size_t>(i) * 2;
        const LGParams p = oracle::random_lg(d, 1 + i % 2, rng);
        const Trajectory t = simulate_lg(p, n, 400 + static_cast<std::uint64_t>(i));
        const ExactSmoother s = exact_smoother(p, t.observations);
        const oracle::Posterior post = oracle::brute_force_posterior(p, t.observations);
        gauss = std::max(gauss, rel(s.filter.loglik, post.loglik) * 1e-0);
        Vector sum = Vector::Zero(d);
        for (std::size_t k = 0; k <= n; ++k) {
            const Index o = static_cast<Index>(k) * d;
            gauss = std::max(gauss, (s.smoothing.marginals[k].mean - post.mean.segment(o, d)).cwiseAbs().maxCoeff());
            gauss = std::max(gauss, (s.smoothing.marginals[k].cov - post.cov.block(o, o, d, d)).cwiseAbs().maxCoeff());
            if (k < n) sum += post.mean.segment(o, d);
        }
        const Vector est = smoothed_additive(s.smoothing, AdditiveFunctional::state_sum(d));
        gauss = std::max(gauss, (est - sum).cwiseAbs().maxCoeff());
    }

    double disc = 0.0;
    for (int i = 0; i < 10; ++i) {
        const Index states = 2 + i % 2;
        const std::size_t n = 3 + static_cast<std::size_t>(i % 5);
        const DiscreteInstance inst = random_discrete_instance(states, 3, n, rng);
        const DiscreteHMM m = inst.model(n);
        const DiscreteSmoothing s = dhmm_filter_smooth(m);
        std::vector<Vector> marg(n + 1, Vector::Zero(states));
        double z = 0.0;
        std::vector<Index> x(n + 1, 0);
        while (true) {
            double w = m.init(x[0]) * std::exp(m.emis_loglik[0](x[0]));
            for (std::size_t k = 1; k <= n; ++k) w *= m.trans(x[k - 1], x[k]) * std::exp(m.emis_loglik[k](x[k]));
            z += w;
            for (std::size_t k = 0; k <= n; ++k) marg[k](x[k]) += w;
            std::size_t j = 0;
            while (j <= n && ++x[j] == states) x[j++] = 0;
            if (j > n) break;
        }
        disc = std::max(disc, std::abs(s.loglik - std::log(z)));
        for (std::size_t k = 0; k <= n; ++k) disc = std::max(disc, (s.marginals[k] - marg[k] / z).cwiseAbs().maxCoeff());
    }
    return {gauss <= 1e-8 && disc <= 1e-10,
            "Gaussian max error " + fmt("%.2e", gauss) + ", discrete max error " + fmt("%.2e", disc)};
}

Outcome bound_gate() {
    const auto t0 = Clock::now();
    ExperimentConfig c;
    c.experiment = "bound-verify";
    c.out_dir = fresh_dir("bound");
    const RunRecord r = run_bound_verify(c);
    const double secs = seconds_since(t0);
    const Table rows = read_csv(c.out_dir / "verifier.csv");
    std::size_t holds = 0;
    for (const auto& row : rows) holds += row.at("holds") == "true";
    const Table growth = read_csv(c.out_dir / "growth.csv");
    bool line_ok = true, marginal_ok = true;
    double marginal_max = 0.0;
    for (const auto& g : growth) {
        line_ok = line_ok && num(g, "lhs") <= num(g, "linear_bound") + kBoundSlack;
        marginal_ok = marginal_ok && num(g, "marginal_lhs") <= num(g, "marginal_bound") + kBoundSlack;
        marginal_max = std::max(marginal_max, num(g, "marginal_lhs"));
    }
    const bool pass = r.success && holds == rows.size() && rows.size() == 200 && line_ok && marginal_ok && secs < 120.0;
    return {pass, std::to_string(holds) + "/" + std::to_string(rows.size()) + " instances hold; growth within line: " +
                      (line_ok ? "yes" : "no") + "; max marginal lhs " + fmt("%.4f", marginal_max) + "; " +
                      fmt("%.1f", secs) + " s"};
}

double scaled_relative_error(const std::vector<double>& ad, const std::vector<double>& fd) {
    double scale = 0.0;
    for (double g : fd) scale = std::max(scale, std::abs(g));
    double worst = 0.0;
    for (std::size_t i = 0; i < ad.size(); ++i)
        worst = std::max(worst, std::abs(ad[i] - fd[i]) / std::max({std::abs(fd[i]), std::abs(ad[i]), 1e-3 * scale}));
    return worst;
}

Outcome gradient_gate() {
    double linear_worst = 0.0;
    Rng rng(105);
    for (Index d : {1, 2, 3}) {
        const LGParams theta = oracle::random_lg(d, d, rng);
        const LGParams lambda = oracle::random_lg(d, d, rng);
        const Trajectory t = simulate_lg(theta, 16, 500 + static_cast<std::uint64_t>(d));
        const ParamVector p = lg_to_params(lambda);
        auto elbo = [&]<class T>(std::span<const T> v) {
            return elbo_closed_form(cast_params<T>(theta), lg_from_params<T>(p.layout, v), t.observations);
        };
        const auto ad = ad::forward_backward([&](std::span<const Var> v) { return elbo(v); }, p.values);
        const auto fd = oracle::central_difference(
            [&](const std::vector<double>& v) { return elbo(std::span<const double>(v)); }, p.values);
        linear_worst = std::max(linear_worst, scaled_relative_error(ad.gradient, fd));
    }

    double nonlinear_worst = 0.0;
    NonlinearConfig cfg;
    const NonlinearEmission emission = make_emission(cfg);
    const Trajectory t = simulate_nonlinear(cfg.dynamics, emission, 8, 506);
    for (const char* mode : {"johnson", "gated"}) {
        AmortizedArchitecture arch;
        arch.mode = parse_update_mode(mode);
        arch.hidden = cfg.hidden;
        Rng init(507);
        const ParamVector p = init_amortized(arch, cfg.dyn_init, init);
        const FrozenNoise noise = draw_frozen_noise(t.size(), cfg.mc_samples, 1, 508);
        auto elbo = [&]<class T>(std::span<const T> v) {
            const AmortizedModelT<T> m = read_amortized<T>(arch, p.layout, v);
            return mc_elbo_nonlinear(cfg.dynamics, emission, amortized_recursion(m, t.observations), t.observations,
                                     noise);
        };
        const auto ad = ad::forward_backward([&](std::span<const Var> v) { return elbo(v); }, p.values);
        const auto fd = oracle::central_difference(
            [&](const std::vector<double>& v) { return elbo(std::span<const double>(v)); }, p.values);
        nonlinear_worst = std::max(nonlinear_worst, scaled_relative_error(ad.gradient, fd));
    }
    return {linear_worst <= 1e-5 && nonlinear_worst <= 1e-5,
            "linear ELBO max rel error " + fmt("%.2e", linear_worst) + ", nonlinear MC-ELBO " +
                fmt("%.2e", nonlinear_worst)};
}

Outcome ffbsi_gate() {
    const auto t0 = Clock::now();
    const LGParams theta = LinearConfig{}.theta;
    const ParticleModel model = ParticleModel::linear(theta);
    const AdditiveFunctional f = AdditiveFunctional::state_sum(1);
    int big = 0;
    double first_z = 0.0, z_sum = 0.0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
        const Trajectory t = simulate_lg(theta, 100, 600 + static_cast<std::uint64_t>(s));
        const double truth = smoothed_additive(exact_smoother(theta, t.observations).smoothing, f)(0);
        const ParticleFilterResult pf = bootstrap_filter(model, t.observations, 2000, 700 + static_cast<std::uint64_t>(s));
        const AdditiveEstimate est = ffbsi_additive(ffbsi(model, pf, 1000, 800 + static_cast<std::uint64_t>(s)), f);
        const double z = (est.mean(0) - truth) / est.std_error(0);
        if (s == 0) first_z = z;
        z_sum += z;
        big += std::abs(z) > 2.0;
    }
    const double secs = seconds_since(t0);
    const double frac = static_cast<double>(big) / seeds;
    return {std::abs(first_z) <= 4.0 && frac < 0.10 && secs < 120.0,
            "seed-0 z = " + fmt("%.2f", first_z) + "; |z| > 2 in " + std::to_string(big) + "/50 (" +
                fmt("%.0f", 100 * frac) + "%); mean z " + fmt("%.2f", z_sum / seeds) + "; " + fmt("%.1f", secs) +
                " s"};
}

Outcome linear_replication_gate() {
    const auto t0 = Clock::now();
    ExperimentConfig c;
    c.experiment = "linear";
    c.out_dir = fresh_dir("linear");
    run_linear_experiment(c);
    const double secs = seconds_since(t0);

    const Table curve = read_csv(c.out_dir / "training_curve.csv");
    const std::size_t window = 5;
    bool bounded = true, nondecreasing = true;
    std::vector<double> trailing;
    double acc = 0.0;
    for (std::size_t e = 0; e < curve.size(); ++e) {
        const double elbo = num(curve[e], "elbo"), ll = num(curve[e], "loglik");
        bounded = bounded && elbo <= ll + 1e-9 * std::abs(ll);
        acc += elbo;
        if (e >= window) acc -= num(curve[e - window], "elbo");
        if (e + 1 >= window) trailing.push_back(acc / static_cast<double>(window));
    }
    for (std::size_t i = 1; i < trailing.size(); ++i)
        nondecreasing = nondecreasing && trailing[i] >= trailing[i - 1] - 1e-9 * std::abs(trailing[i - 1]);

    const auto& cfg = c.linear;
    const Table errors = read_csv(c.out_dir / "additive_error.csv");
    // error[epoch][sequence][n]
    std::map<std::size_t, std::map<std::size_t, std::map<std::size_t, double>>> err;
    for (const auto& row : errors)
        err[static_cast<std::size_t>(num(row, "checkpoint_epoch"))][static_cast<std::size_t>(num(row, "sequence_id"))]
           [static_cast<std::size_t>(num(row, "n"))] = num(row, "abs_error");
    std::size_t decreasing = 0;
    for (std::size_t j = 0; j < cfg.n_eval_sequences; ++j) {
        bool ok = true;
        for (std::size_t i = 1; i < cfg.stopping_epochs.size(); ++i)
            ok = ok && err[cfg.stopping_epochs[i]][j][cfg.n_eval] < err[cfg.stopping_epochs[i - 1]][j][cfg.n_eval];
        decreasing += ok;
    }
    std::vector<double> ns(cfg.prefixes.begin(), cfg.prefixes.end());
    double min_r = 1.0;
    std::string rs;
    for (std::size_t epoch : cfg.stopping_epochs) {
        std::vector<double> avg;
        for (std::size_t n : cfg.prefixes) {
            double s = 0.0;
            for (std::size_t j = 0; j < cfg.n_eval_sequences; ++j) s += err[epoch][j][n];
            avg.push_back(s / static_cast<double>(cfg.n_eval_sequences));
        }
        const double r = pearson(ns, avg);
        min_r = std::min(min_r, r);
        rs += (rs.empty() ? "" : "/") + fmt("%.3f", r);
    }
    const bool pass = bounded && nondecreasing && decreasing >= 18 && min_r >= 0.95 && secs < 600.0;
    return {pass, std::string("ELBO <= loglik: ") + (bounded ? "yes" : "no") + "; trailing ELBO nondecreasing: " +
                      (nondecreasing ? "yes" : "no") + "; strict decrease " + std::to_string(decreasing) + "/" +
                      std::to_string(cfg.n_eval_sequences) + "; Pearson(n, mean error) " + rs + "; " +
                      fmt("%.1f", secs) + " s"};
}

Outcome nonlinear_replication_gate() {
    const auto t0 = Clock::now();
    ExperimentConfig c;
    c.experiment = "nonlinear";
    c.out_dir = fresh_dir("nonlinear");
    run_nonlinear_experiment(c);
    const double secs = seconds_since(t0);
    const Table table = read_csv(c.out_dir / "final_table.csv");
    std::size_t wins = 0;
    std::vector<double> ratios;
    for (const auto& row : table) {
        const double j = num(row, "smooth_err_johnson"), g = num(row, "smooth_err_gated");
        wins += g < j;
        ratios.push_back(g / j);
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted.empty() ? NAN : sorted[sorted.size() / 2];
    std::string rs;
    for (double r : ratios) rs += (rs.empty() ? "" : "/") + fmt("%.2f", r);
    const bool pass = table.size() == 5 && wins >= 4 && median <= 0.5 && secs < 1800.0;
    return {pass, "gated < johnson in " + std::to_string(wins) + "/" + std::to_string(table.size()) + "; ratios " + rs +
                      "; median " + fmt("%.2f", median) + "; " + fmt("%.1f", secs) + " s"};
}

Outcome reproducibility_gate(const std::string& cli) {
    const fs::path cfg_dir = fresh_dir("cli_configs");
    const std::vector<std::pair<std::string, std::string>> runs{
        {"simulate", R"({"experiment":"linear","simulate":{"n":200,"n_sequences":2}})"},
        {"train-linear",
         R"({"experiment":"linear","linear":{"n_train":32,"n_train_sequences":2,"epochs":20,"stopping_epochs":[10,20],"n_eval":200,"n_eval_sequences":3,"prefixes":[100,200]}})"},
        {"ffbsi", R"({"experiment":"nonlinear","ffbsi":{"n":30,"particles":300,"trajectories":100}})"},
        {"verify-bound",
         R"({"experiment":"bound-verify","bound":{"instances":20,"max_n":10,"growth_n":[10,20,30]}})"},
    };
    std::size_t compared = 0;
    std::string mismatch;
    for (const auto& [cmd, json] : runs) {
        const fs::path cfg = cfg_dir / (cmd + ".json");
        std::ofstream(cfg) << json;
        std::vector<fs::path> outs;
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path out = fresh_dir("cli_" + cmd + "_" + std::to_string(rep));
            const std::string line = "\"" + cli + "\" " + cmd + " --config \"" + cfg.string() + "\" --seed 17 --out \"" +
                                     out.string() + "\" --threads " + std::to_string(1 + rep) + " > /dev/null";
            if (std::system(line.c_str()) != 0) return {false, cmd + " exited with an error"};
            outs.push_back(out);
        }
        for (const auto& entry : fs::directory_iterator(outs[0])) {
            if (entry.path().extension() != ".csv") continue;
            const fs::path other = outs[1] / entry.path().filename();
            ++compared;
            if (!fs::exists(other) || slurp(entry.path()) != slurp(other))
                mismatch += (mismatch.empty() ? "" : ", ") + cmd + "/" + entry.path().filename().string();
        }
    }
    return {mismatch.empty() && compared > 0,
            std::to_string(compared) + " CSV files compared across repeated runs (threads 1 vs 2)" +
                (mismatch.empty() ? "" : "; differing: " + mismatch)};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <path to bvsmooth CLI>\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 exactness: ELBO(theta, theta) equals Kalman loglik", exactness_gate},
        {"2 recursion: recursive ELBO equals closed form", recursion_gate},
        {"3 oracles: Kalman and discrete smoothing vs brute force", oracle_gate},
        {"4 additive bound on discrete HMMs", bound_gate},
        {"5 gradients: autodiff vs central differences", gradient_gate},
        {"6 FFBSi consistency on the linear-Gaussian model", ffbsi_gate},
        {"7 linear experiment properties", linear_replication_gate},
        {"8 nonlinear experiment: gated vs Johnson", nonlinear_replication_gate},
        {"9 reproducibility of CLI outputs", [&] { return reproducibility_gate(cli); }},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s criterion %s -- %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
