#include <cmath>
#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include "bvs/discrete.hpp"
#include "bvs/rng.hpp"
#include "bvs/variational.hpp"

using namespace bvs;

namespace {

/// Visits every path x_{0:n} in {0..S-1}^{n+1}.
void for_each_path(Index s, std::size_t n, const std::function<void(const std::vector<Index>&)>& visit) {
    std::vector<Index> path(n + 1, 0);
    while (true) {
        visit(path);
        std::size_t i = 0;
        while (i <= n && ++path[i] == s) path[i++] = 0;
        if (i > n) return;
    }
}

double path_weight(const DiscreteHMM& m, const std::vector<Index>& x) {
    double w = m.init(x[0]) * std::exp(m.emis_loglik[0](x[0]));
    for (std::size_t k = 1; k < x.size(); ++k) w *= m.trans(x[k - 1], x[k]) * std::exp(m.emis_loglik[k](x[k]));
    return w;
}

double q_weight(const DiscreteBackwardVariational& q, const std::vector<Index>& x) {
    double w = q.terminal(x.back());
    for (std::size_t k = 1; k < x.size(); ++k) w *= q.kernels[k - 1](x[k], x[k - 1]);
    return w;
}

double h_value(const AdditiveFunctional& f, const std::vector<Index>& x) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < x.size(); ++k)
        s += f.term(k, Vector::Constant(1, static_cast<double>(x[k])), Vector::Constant(1, static_cast<double>(x[k + 1])))(0);
    return s;
}

}  // namespace

TEST(DiscreteSmoothing, MatchesExhaustiveEnumeration) {
    Rng rng(1);
    const DiscreteInstance inst = random_discrete_instance(3, 4, 6, rng);
    const DiscreteHMM m = inst.model(6);
    const DiscreteSmoothing s = dhmm_filter_smooth(m);
    double z = 0.0;
    std::vector<Vector> marg(7, Vector::Zero(3));
    std::vector<Matrix> pair(6, Matrix::Zero(3, 3));
    for_each_path(3, 6, [&](const std::vector<Index>& x) {
        const double w = path_weight(m, x);
        z += w;
        for (std::size_t k = 0; k <= 6; ++k) marg[k](x[k]) += w;
        for (std::size_t k = 0; k < 6; ++k) pair[k](x[k], x[k + 1]) += w;
    });
    EXPECT_NEAR(s.loglik, std::log(z), 1e-12);
    for (std::size_t k = 0; k <= 6; ++k) EXPECT_LT((s.marginals[k] - marg[k] / z).cwiseAbs().maxCoeff(), 1e-12);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_LT((s.pairwise[k] - pair[k] / z).cwiseAbs().maxCoeff(), 1e-12);

    // Filters: enumerate prefixes.
    for (std::size_t k = 0; k <= 6; ++k) {
        const DiscreteHMM prefix = inst.model(k);
        Vector f = Vector::Zero(3);
        for_each_path(3, k, [&](const std::vector<Index>& x) { f(x[k]) += path_weight(prefix, x); });
        EXPECT_LT((s.filters[k] - f / f.sum()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(DiscreteSmoothing, IidChainGivesPerStepPosterior) {
    Vector init(3);
    init << 0.2, 0.5, 0.3;
    const Matrix trans = init.transpose().replicate(3, 1);
    Matrix emission(3, 2);
    emission << 0.9, 0.1, 0.4, 0.6, 0.2, 0.8;
    const DiscreteHMM m = DiscreteHMM::from_observations(init, trans, emission, {0, 1, 1, 0});
    const DiscreteSmoothing s = dhmm_filter_smooth(m);
    for (std::size_t k = 0; k < 4; ++k) {
        Vector p = init.cwiseProduct(m.emis_loglik[k].array().exp().matrix());
        p /= p.sum();
        EXPECT_LT((s.marginals[k] - p).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT((s.filters[k] - p).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(DiscreteSmoothing, UniformEmissionsGivePriorMarginals) {
    Vector init(2);
    init << 0.7, 0.3;
    Matrix trans(2, 2);
    trans << 0.9, 0.1, 0.2, 0.8;
    const DiscreteHMM m = DiscreteHMM::from_observations(init, trans, Matrix::Constant(2, 3, 1.0 / 3.0), {0, 2, 1, 1, 0});
    const DiscreteSmoothing s = dhmm_filter_smooth(m);
    Vector p = init;
    for (std::size_t k = 0; k <= 4; ++k) {
        if (k > 0) p = (p.transpose() * trans).transpose();
        EXPECT_LT((s.marginals[k] - p).cwiseAbs().maxCoeff(), 1e-14);
    }
    EXPECT_NEAR(s.loglik, 5.0 * std::log(1.0 / 3.0), 1e-12);
}

TEST(DiscreteHMM, RejectsBadInputs) {
    Vector init(2);
    init << 0.5, 0.5;
    Matrix trans(2, 2);
    trans << 1.0, 0.0, 0.5, 0.5;
    const Matrix emission = Matrix::Constant(2, 2, 0.5);
    EXPECT_THROW(DiscreteHMM::from_observations(init, trans, emission, {0, 1}).validate(), DegenerateModel);
    trans << 0.6, 0.6, 0.5, 0.5;
    EXPECT_THROW(DiscreteHMM::from_observations(init, trans, emission, {0, 1}).validate(), InvalidArgument);
    trans << 0.5, 0.5, 0.5, 0.5;
    EXPECT_THROW(DiscreteHMM::from_observations(init, trans, emission, {0, 2}), InvalidArgument);
}

TEST(BackwardMarginals, MatchEnumerationOfTheVariationalJoint) {
    Rng rng(2);
    const DiscreteInstance inst = random_discrete_instance(3, 3, 5, rng);
    const DiscreteHMM m = inst.model(5);
    const DiscreteBackwardVariational q = dirichlet_perturb(exact_backward_variational(dhmm_filter_smooth(m)), 3.0, rng);
    std::vector<Vector> qm;
    std::vector<Matrix> qp;
    backward_marginals(q, qm, qp);
    const AdditiveFunctional f = AdditiveFunctional::cross_product(1);
    double total = 0.0, expect = 0.0;
    std::vector<Matrix> pair(5, Matrix::Zero(3, 3));
    for_each_path(3, 5, [&](const std::vector<Index>& x) {
        const double w = q_weight(q, x);
        total += w;
        expect += w * h_value(f, x);
        for (std::size_t k = 0; k < 5; ++k) pair[k](x[k], x[k + 1]) += w;
    });
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_LT((qp[k] - pair[k]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(discrete_additive(qp, f, default_state_values(3)), expect, 1e-12);
}

TEST(DiscreteCk, ZeroForExactKernels) {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const DiscreteInstance inst = random_discrete_instance(4, 3, 12, rng);
        const DiscreteHMM m = inst.model(12);
        const DiscreteBackwardVariational q = exact_backward_variational(dhmm_filter_smooth(m));
        for (double c : dhmm_ck(m, q).values) EXPECT_LT(c, 1e-12);
        const AdditiveFunctional f = AdditiveFunctional::state_sum(1);
        EXPECT_LT(dhmm_prop1_check(m, q, {}, f, default_state_values(4)).lhs, 1e-10);
    }
}

TEST(DiscreteCk, MatchesLoopDefinition) {
    Rng rng(4);
    const DiscreteInstance inst = random_discrete_instance(3, 2, 4, rng);
    const DiscreteHMM m = inst.model(4);
    const DiscreteSmoothing s = dhmm_filter_smooth(m);
    const DiscreteBackwardVariational q = dirichlet_perturb(exact_backward_variational(s), 2.0, rng);
    const DiscreteCkProfile ck = dhmm_ck(m, q);
    ASSERT_EQ(ck.values.size(), 5u);
    EXPECT_NEAR(ck.values[0], 0.0, 1e-15);
    for (std::size_t k = 1; k <= 4; ++k) {
        const Vector rho = k == 4 ? q.terminal : s.filters[k];
        double norm = 0.0;
        for (Index a = 0; a < 3; ++a)
            for (Index b = 0; b < 3; ++b) norm += s.filters[k - 1](a) * m.trans(a, b) * std::exp(m.emis_loglik[k](b));
        double c = 0.0;
        for (Index a = 0; a < 3; ++a)
            for (Index b = 0; b < 3; ++b) {
                const double j1 = rho(b) * q.kernels[k - 1](b, a);
                const double j2 = s.filters[k - 1](a) * m.trans(a, b) * std::exp(m.emis_loglik[k](b)) / norm;
                c += std::abs(j1 - j2);
            }
        EXPECT_NEAR(ck.values[k], c, 1e-13) << k;
        EXPECT_GT(ck.values[k], 0.0);
        EXPECT_LE(ck.values[k], 2.0 + 1e-12);
    }
    std::vector<Vector> wrong = s.filters;
    EXPECT_THROW(dhmm_ck(m, q, wrong), InvalidArgument);
    wrong.pop_back();
    EXPECT_THROW(dhmm_ck(m, q, wrong), LengthMismatch);
}

TEST(DiscreteSigma, HandCaseAndDegenerate) {
    Vector init(2);
    init << 0.5, 0.5;
    Matrix trans(2, 2);
    trans << 0.5, 0.5, 0.5, 0.5;
    Matrix emission(2, 2);
    emission << 0.8, 0.2, 0.4, 0.6;
    const DiscreteHMM m = DiscreteHMM::from_observations(init, trans, emission, {0, 1, 0});
    DiscreteBackwardVariational q;
    q.terminal = Vector::Constant(2, 0.5);
    q.kernels.assign(2, Matrix::Constant(2, 2, 0.5));
    const MixingConstants sig = dhmm_sigma(m, q);
    // trans·g ranges over 0.5·{0.2, 0.6} and 0.5·{0.8, 0.4}; kernels are all 0.5.
    EXPECT_NEAR(sig.sigma_minus, 0.1, 1e-15);
    EXPECT_NEAR(sig.sigma_plus, 0.5, 1e-15);
    EXPECT_NEAR(sig.rho(), 0.8, 1e-15);

    DiscreteBackwardVariational hole = q;
    hole.kernels[0] << 1.0, 0.0, 0.5, 0.5;
    EXPECT_THROW(dhmm_sigma(m, hole), DegenerateModel);
    const DiscreteHMM single = DiscreteHMM::from_observations(init, trans, emission, {0});
    DiscreteBackwardVariational q0;
    q0.terminal = Vector::Constant(2, 0.5);
    EXPECT_THROW(dhmm_sigma(single, q0), DegenerateModel);
}

TEST(DiscreteBound, HoldsOnRandomPerturbedInstances) {
    Rng rng(5);
    const AdditiveFunctional f = AdditiveFunctional::state_sum(1);
    for (int trial = 0; trial < 40; ++trial) {
        const Index s = 2 + trial % 4;
        const DiscreteInstance inst = random_discrete_instance(s, 3, 5 + static_cast<std::size_t>(trial % 7), rng);
        const DiscreteHMM m = inst.model(inst.observations.size() - 1);
        const DiscreteBackwardVariational exact = exact_backward_variational(dhmm_filter_smooth(m));
        const DiscreteBackwardVariational q =
            trial % 2 == 0 ? dirichlet_perturb(exact, 10.0, rng) : mix_toward_state(exact, 0.2, 0);
        const Prop1Check c = dhmm_prop1_check(m, q, {}, f, default_state_values(s));
        EXPECT_TRUE(c.holds) << trial << ": " << c.lhs << " > " << c.rhs;
        EXPECT_LE(c.sigma.sigma_minus, c.sigma.sigma_plus);
        EXPECT_NEAR(c.rhs, prop1_rhs(c.ck.values, c.sigma.sigma_minus, c.sigma.sigma_plus, c.h_inf), 1e-12 * c.rhs);
    }
}

TEST(DirichletPerturb, InfiniteConcentrationIsIdentity) {
    Rng rng(6);
    const DiscreteInstance inst = random_discrete_instance(3, 3, 4, rng);
    const DiscreteBackwardVariational exact = exact_backward_variational(dhmm_filter_smooth(inst.model(4)));
    const DiscreteBackwardVariational same =
        dirichlet_perturb(exact, std::numeric_limits<double>::infinity(), rng);
    EXPECT_EQ(same.terminal, exact.terminal);
    for (std::size_t k = 0; k < exact.horizon(); ++k) EXPECT_EQ(same.kernels[k], exact.kernels[k]);
    const DiscreteBackwardVariational noisy = dirichlet_perturb(exact, 1.0, rng);
    EXPECT_NO_THROW(noisy.validate());
    EXPECT_THROW(dirichlet_perturb(exact, 0.0, rng), InvalidArgument);
}

TEST(MixTowardState, RowsMoveTowardThePointMass) {
    Rng rng(7);
    const DiscreteInstance inst = random_discrete_instance(3, 3, 4, rng);
    const DiscreteBackwardVariational exact = exact_backward_variational(dhmm_filter_smooth(inst.model(4)));
    const DiscreteBackwardVariational mixed = mix_toward_state(exact, 0.25, 2);
    for (std::size_t k = 0; k < exact.horizon(); ++k) {
        Matrix expect = 0.75 * exact.kernels[k];
        expect.col(2).array() += 0.25;
        EXPECT_LT((mixed.kernels[k] - expect).cwiseAbs().maxCoeff(), 1e-15);
    }
    EXPECT_THROW(mix_toward_state(exact, 1.0, 0), InvalidArgument);
}
