#include <algorithm>
#include <cmath>

#include "bvs/discrete.hpp"
#include "bvs/parallel.hpp"
#include "bvs/variational.hpp"
#include "common.hpp"

namespace bvs {

namespace {

struct InstanceRow {
    Index states = 0;
    std::size_t n = 0;
    double kappa = 0.0;
    Prop1Check check;
};

AdditiveFunctional random_table_functional(Index states, std::size_t n, Rng& rng) {
    std::vector<Matrix> tables(n, Matrix(states, states));
    for (auto& t : tables)
        for (Index i = 0; i < states; ++i)
            for (Index j = 0; j < states; ++j) t(i, j) = rng.uniform(-1.0, 1.0);
    return AdditiveFunctional::custom(1, [tables](std::size_t k, const Vector& x, const Vector& xn) {
        return Vector::Constant(1, tables.at(k)(static_cast<Index>(x(0)), static_cast<Index>(xn(0))));
    });
}

AdditiveFunctional scalar_state_sum() {
    return AdditiveFunctional::custom(1, [](std::size_t, const Vector& x, const Vector&) { return x; });
}

std::string format_kappa(double k) { return std::isinf(k) ? "inf" : std::to_string(k); }

}  // namespace

RunRecord run_bound_verify(const ExperimentConfig& config) {
    detail::Stopwatch clock;
    RunRecord record = detail::start_record("verify-bound", config);
    const BoundConfig& cfg = config.bound;
    std::filesystem::create_directories(config.out_dir);

    std::vector<InstanceRow> rows(cfg.instances);
    parallel_for(cfg.instances, config.threads, [&](std::size_t i) {
        Rng rng(detail::stream_seed(config.seed, detail::Stream::Bound, i));
        InstanceRow& row = rows[i];
        row.states = cfg.state_counts[static_cast<std::size_t>(rng.uniform() * static_cast<double>(cfg.state_counts.size())) %
                                      cfg.state_counts.size()];
        row.n = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(cfg.max_n)) % cfg.max_n;
        row.kappa = cfg.kappas[i % cfg.kappas.size()];
        const DiscreteInstance inst = random_discrete_instance(row.states, cfg.symbols, row.n, rng);
        const DiscreteHMM model = inst.model(row.n);
        const DiscreteSmoothing truth = dhmm_filter_smooth(model);
        const DiscreteBackwardVariational q = dirichlet_perturb(exact_backward_variational(truth), row.kappa, rng);
        const AdditiveFunctional f =
            cfg.functional == "random" ? random_table_functional(row.states, row.n, rng) : scalar_state_sum();
        row.check = dhmm_prop1_check(model, q, {}, f, default_state_values(row.states));
    });

    bool all_hold = true;
    {
        auto out = detail::open_csv(config.out_dir, "verifier.csv",
                                    "instance_id,S,n,kappa,sigma_minus,sigma_plus,rho,lhs,rhs,holds", record);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            out << i << ',' << r.states << ',' << r.n << ',' << format_kappa(r.kappa) << ','
                << r.check.sigma.sigma_minus << ',' << r.check.sigma.sigma_plus << ',' << r.check.sigma.rho() << ','
                << r.check.lhs << ',' << r.check.rhs << ',' << (r.check.holds ? "true" : "false") << '\n';
            all_hold = all_hold && r.check.holds;
        }
    }

    // Growth sweep: one path, fixed kernel perturbation, increasing prefixes.
    Rng rng(detail::stream_seed(config.seed, detail::Stream::Bound, cfg.instances));
    const std::size_t max_n = *std::max_element(cfg.growth_n.begin(), cfg.growth_n.end());
    const DiscreteInstance inst = random_discrete_instance(cfg.growth_states, cfg.symbols, max_n, rng);
    const std::vector<Vector> values = default_state_values(cfg.growth_states);
    const AdditiveFunctional sum_f = scalar_state_sum();
    const AdditiveFunctional marginal_f = AdditiveFunctional::marginal(1, cfg.marginal_k);
    std::vector<double> ns, lhs, rhs, line;
    bool growth_ok = true;
    {
        auto out = detail::open_csv(config.out_dir, "growth.csv",
                                    "n,lhs,rhs,linear_bound,marginal_lhs,marginal_bound,c_plus,sigma_minus,sigma_plus",
                                    record);
        for (std::size_t n : cfg.growth_n) {
            const DiscreteHMM model = inst.model(n);
            const DiscreteSmoothing truth = dhmm_filter_smooth(model);
            const DiscreteBackwardVariational q =
                mix_toward_state(exact_backward_variational(truth), cfg.growth_epsilon, 0);
            const Prop1Check sum_check = dhmm_prop1_check(model, q, {}, sum_f, values);
            const Prop1Check marg_check = dhmm_prop1_check(model, q, {}, marginal_f, values);
            const double c_plus = *std::max_element(sum_check.ck.values.begin(), sum_check.ck.values.end());
            const double h_inf = static_cast<double>(cfg.growth_states - 1);
            const auto& s = sum_check.sigma;
            const double lin = linear_growth_bound(c_plus, h_inf, s.sigma_minus, s.sigma_plus, n);
            const double marg_bound = linear_growth_bound(c_plus, h_inf, s.sigma_minus, s.sigma_plus, 1);
            growth_ok = growth_ok && sum_check.holds && sum_check.lhs <= lin + kBoundSlack &&
                        marg_check.lhs <= marg_bound + kBoundSlack;
            out << n << ',' << sum_check.lhs << ',' << sum_check.rhs << ',' << lin << ',' << marg_check.lhs << ','
                << marg_bound << ',' << c_plus << ',' << s.sigma_minus << ',' << s.sigma_plus << '\n';
            ns.push_back(static_cast<double>(n));
            lhs.push_back(sum_check.lhs);
            rhs.push_back(sum_check.rhs);
            line.push_back(lin);
        }
    }
    if (ns.size() >= 2) {
        auto out = detail::open_csv(config.out_dir, "growth_summary.csv",
                                    "lhs_slope,rhs_slope,linear_bound_slope,within_bounds", record);
        out << fitted_slope(ns, lhs) << ',' << fitted_slope(ns, rhs) << ',' << fitted_slope(ns, line) << ','
            << (growth_ok ? "true" : "false") << '\n';
    }
    record.success = all_hold && growth_ok;
    for (const auto& r : rows) record.sequence_errors.push_back(r.check.lhs);
    record.wall_time_seconds = clock.seconds();
    record.write_manifest(config.out_dir);
    return record;
}

}  // namespace bvs
