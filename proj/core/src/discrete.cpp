#include "bvs/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bvs/rng.hpp"
#include "bvs/variational.hpp"

namespace bvs {

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr double kDirichletFloor = 1e-12;

void check_stochastic_rows(const Matrix& m, const char* what) {
    for (Index i = 0; i < m.rows(); ++i) {
        if (std::abs(m.row(i).sum() - 1.0) > kRowTolerance)
            throw InvalidArgument(std::string(what) + " row " + std::to_string(i) + " does not sum to one");
        if ((m.row(i).array() <= 0.0).any())
            throw DegenerateModel(std::string(what) + " has a non-positive entry in row " + std::to_string(i));
    }
}

void check_distribution(const Vector& p, const char* what) {
    if (std::abs(p.sum() - 1.0) > kRowTolerance) throw InvalidArgument(std::string(what) + " does not sum to one");
    if ((p.array() < 0.0).any()) throw InvalidArgument(std::string(what) + " has a negative entry");
}

Vector normalized(const Vector& v) { return v / v.sum(); }

Vector dirichlet(const Vector& alpha, Rng& rng) {
    Vector g(alpha.size());
    for (Index i = 0; i < alpha.size(); ++i) g(i) = std::max(rng.gamma(alpha(i)), 0.0);
    double s = g.sum();
    if (!(s > 0.0)) {
        g = alpha;
        s = g.sum();
    }
    g /= s;
    g = g.array().max(kDirichletFloor).matrix();
    return g / g.sum();
}

Index sample_index(const Vector& p, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        acc += p(i);
        if (u < acc) return i;
    }
    return p.size() - 1;
}

}  // namespace

void DiscreteHMM::validate() const {
    const Index s = states();
    if (s < 1 || trans.rows() != s || trans.cols() != s) throw DimMismatch("transition matrix shape");
    if (emis_loglik.empty()) throw LengthMismatch("no observations");
    for (const auto& e : emis_loglik)
        if (e.size() != s) throw DimMismatch("emission log-likelihood size");
    check_distribution(init, "initial distribution");
    check_stochastic_rows(trans, "transition matrix");
}

DiscreteHMM DiscreteHMM::from_observations(const Vector& init, const Matrix& trans, const Matrix& emission,
                                           const std::vector<Index>& y) {
    DiscreteHMM m;
    m.init = init;
    m.trans = trans;
    for (Index yk : y) {
        if (yk < 0 || yk >= emission.cols()) throw InvalidArgument("observation symbol out of range");
        m.emis_loglik.push_back(emission.col(yk).array().log().matrix());
    }
    m.validate();
    return m;
}

DiscreteSmoothing dhmm_filter_smooth(const DiscreteHMM& model) {
    model.validate();
    const std::size_t n = model.horizon();
    DiscreteSmoothing out;
    Vector pred = model.init;
    for (std::size_t k = 0; k <= n; ++k) {
        if (k > 0) pred = model.trans.transpose() * out.filters.back();
        const Vector& ll = model.emis_loglik[k];
        const double mx = ll.maxCoeff();
        const Vector w = pred.array() * (ll.array() - mx).exp();
        const double z = w.sum();
        if (!(z > 0.0)) throw DegenerateModel("observation has zero probability at step " + std::to_string(k));
        out.loglik += std::log(z) + mx;
        out.filters.push_back(w / z);
    }
    for (std::size_t k = 1; k <= n; ++k) {
        const Vector& f = out.filters[k - 1];
        Matrix kern(model.states(), model.states());
        for (Index i = 0; i < kern.rows(); ++i) kern.row(i) = normalized(f.cwiseProduct(model.trans.col(i))).transpose();
        out.kernels.push_back(std::move(kern));
    }
    backward_marginals(exact_backward_variational(out), out.marginals, out.pairwise);
    return out;
}

void DiscreteBackwardVariational::validate() const {
    check_distribution(terminal, "terminal distribution");
    for (const auto& k : kernels) {
        if (k.rows() != terminal.size() || k.cols() != terminal.size()) throw DimMismatch("kernel shape");
        check_stochastic_rows(k, "variational kernel");
    }
}

DiscreteBackwardVariational exact_backward_variational(const DiscreteSmoothing& smoothing) {
    return {smoothing.filters.back(), smoothing.kernels};
}

void backward_marginals(const DiscreteBackwardVariational& q, std::vector<Vector>& marginals,
                        std::vector<Matrix>& pairwise) {
    const std::size_t n = q.horizon();
    marginals.assign(n + 1, Vector());
    pairwise.assign(n, Matrix());
    marginals[n] = q.terminal;
    for (std::size_t k = n; k > 0; --k) {
        const Matrix& kern = q.kernels[k - 1];
        // joint(x_k = i, x_{k-1} = j) = marg_k(i) K(i, j); stored as (x_{k-1}, x_k)
        const Matrix joint = marginals[k].asDiagonal() * kern;
        pairwise[k - 1] = joint.transpose();
        marginals[k - 1] = joint.colwise().sum().transpose();
    }
}

std::vector<Vector> default_state_values(Index states) {
    std::vector<Vector> v;
    for (Index i = 0; i < states; ++i) v.push_back(Vector::Constant(1, static_cast<double>(i)));
    return v;
}

Matrix additive_term_table(const AdditiveFunctional& f, std::size_t k, const std::vector<Vector>& values) {
    if (f.out_dim != 1) throw DimMismatch("discrete verifier expects a scalar functional");
    const Index s = static_cast<Index>(values.size());
    Matrix t(s, s);
    for (Index i = 0; i < s; ++i)
        for (Index j = 0; j < s; ++j) t(i, j) = f.term(k, values[static_cast<std::size_t>(i)],
                                                      values[static_cast<std::size_t>(j)])(0);
    return t;
}

double discrete_additive(const std::vector<Matrix>& pairwise, const AdditiveFunctional& f,
                         const std::vector<Vector>& values) {
    double total = 0.0;
    for (std::size_t k = 0; k < pairwise.size(); ++k)
        total += pairwise[k].cwiseProduct(additive_term_table(f, k, values)).sum();
    return total;
}

DiscreteCkProfile dhmm_ck(const DiscreteHMM& model, const DiscreteBackwardVariational& q,
                          std::vector<Vector> rho_hats) {
    const DiscreteSmoothing truth = dhmm_filter_smooth(model);
    const std::size_t n = model.horizon();
    if (q.horizon() != n) throw LengthMismatch("variational horizon differs from the model");
    if (rho_hats.empty()) {
        rho_hats = truth.filters;
        rho_hats.back() = q.terminal;
    }
    if (rho_hats.size() != n + 1) throw LengthMismatch("need one rho_hat per time step");
    if ((rho_hats.back() - q.terminal).cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidArgument("rho_hat at the final time must equal the variational terminal");
    DiscreteCkProfile out;
    out.values.push_back((rho_hats[0] - truth.filters[0]).cwiseAbs().sum());
    for (std::size_t k = 1; k <= n; ++k) {
        // both joints indexed (x_{k-1}, x_k)
        const Matrix j1 = (rho_hats[k].asDiagonal() * q.kernels[k - 1]).transpose();
        const Vector g = model.emis_loglik[k].array().exp();
        Matrix j2 = rho_hats[k - 1].asDiagonal() * model.trans * g.asDiagonal();
        j2 /= j2.sum();
        out.values.push_back((j1 - j2).cwiseAbs().sum());
    }
    out.rho_hats = std::move(rho_hats);
    return out;
}

MixingConstants dhmm_sigma(const DiscreteHMM& model, const DiscreteBackwardVariational& q) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t k = 0; k < model.horizon(); ++k) {
        const Vector g = model.emis_loglik[k + 1].array().exp();
        const Matrix ell = model.trans * g.asDiagonal();
        lo = std::min(lo, ell.minCoeff());
        hi = std::max(hi, ell.maxCoeff());
    }
    for (const auto& kern : q.kernels) {
        lo = std::min(lo, kern.minCoeff());
        hi = std::max(hi, kern.maxCoeff());
    }
    if (!std::isfinite(lo)) throw DegenerateModel("no transitions to bound (n = 0)");
    if (!(lo > 0.0)) throw DegenerateModel("sigma_minus is zero");
    return {lo, hi};
}

Prop1Check dhmm_prop1_check(const DiscreteHMM& model, const DiscreteBackwardVariational& q,
                            const std::vector<Vector>& rho_hats, const AdditiveFunctional& f,
                            const std::vector<Vector>& values) {
    q.validate();
    const DiscreteSmoothing truth = dhmm_filter_smooth(model);
    std::vector<Vector> qm;
    std::vector<Matrix> qp;
    backward_marginals(q, qm, qp);
    Prop1Check out;
    out.lhs = std::abs(discrete_additive(qp, f, values) - discrete_additive(truth.pairwise, f, values));
    out.ck = dhmm_ck(model, q, rho_hats);
    out.sigma = dhmm_sigma(model, q);
    for (std::size_t k = 0; k < model.horizon(); ++k)
        out.h_inf.push_back(additive_term_table(f, k, values).cwiseAbs().maxCoeff());
    out.rhs = prop1_rhs(out.ck.values, out.sigma.sigma_minus, out.sigma.sigma_plus, out.h_inf);
    out.holds = out.lhs <= out.rhs + kBoundSlack;
    return out;
}

DiscreteBackwardVariational dirichlet_perturb(const DiscreteBackwardVariational& exact, double kappa, Rng& rng) {
    if (!(kappa > 0.0)) throw InvalidArgument("Dirichlet concentration must be positive");
    if (std::isinf(kappa)) return exact;
    DiscreteBackwardVariational q = exact;
    q.terminal = dirichlet(exact.terminal * kappa, rng);
    for (auto& kern : q.kernels)
        for (Index i = 0; i < kern.rows(); ++i) kern.row(i) = dirichlet(Vector(kern.row(i).transpose() * kappa), rng).transpose();
    return q;
}

DiscreteBackwardVariational mix_toward_state(const DiscreteBackwardVariational& exact, double epsilon, Index state) {
    if (epsilon < 0.0 || epsilon >= 1.0) throw InvalidArgument("mixing weight must lie in [0, 1)");
    DiscreteBackwardVariational q = exact;
    for (auto& kern : q.kernels) {
        kern *= 1.0 - epsilon;
        kern.col(state).array() += epsilon;
    }
    return q;
}

DiscreteHMM DiscreteInstance::model(std::size_t prefix) const {
    if (prefix >= observations.size()) throw LengthMismatch("prefix longer than the simulated path");
    return DiscreteHMM::from_observations(
        init, trans, emission, std::vector<Index>(observations.begin(), observations.begin() + static_cast<long>(prefix) + 1));
}

DiscreteInstance random_discrete_instance(Index states, Index symbols, std::size_t n, Rng& rng) {
    if (states < 1 || symbols < 1) throw InvalidArgument("need at least one state and one symbol");
    DiscreteInstance inst;
    const Vector ones_s = Vector::Ones(states);
    inst.init = dirichlet(ones_s, rng);
    inst.trans.resize(states, states);
    for (Index i = 0; i < states; ++i) inst.trans.row(i) = dirichlet(ones_s, rng).transpose();
    inst.emission.resize(states, symbols);
    for (Index i = 0; i < states; ++i) inst.emission.row(i) = dirichlet(Vector(Vector::Ones(symbols)), rng).transpose();
    Index x = sample_index(inst.init, rng);
    for (std::size_t k = 0; k <= n; ++k) {
        if (k > 0) x = sample_index(inst.trans.row(x).transpose(), rng);
        inst.states.push_back(x);
        inst.observations.push_back(sample_index(inst.emission.row(x).transpose(), rng));
    }
    return inst;
}

}  // namespace bvs
