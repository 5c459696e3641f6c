#include <cmath>

#include <gtest/gtest.h>

#include "bvs/kalman.hpp"
#include "bvs/rng.hpp"
#include "oracles.hpp"

using namespace bvs;

namespace {

struct Case {
    Index d;
    Index m;
    std::size_t n;
};

}  // namespace

TEST(KalmanFilter, ConjugateFirstStep) {
    const LGParams p = scalar_lg_params(0.0, 1.0, 0.0, 1.0, 1.0, 1.0);
    const FilterSequence f = kalman_filter(p, {Vector::Constant(1, 2.0)});
    EXPECT_NEAR(f.filters[0].mean(0), 1.0, 1e-15);
    EXPECT_NEAR(f.filters[0].cov(0, 0), 0.5, 1e-15);
}

TEST(KalmanFilter, UninformativeObservationsKeepPredictives) {
    Rng rng(1);
    LGParams p = oracle::random_lg(2, 2, rng);
    const Trajectory t = simulate_lg(p, 10, 2);
    p.r = Matrix::Identity(2, 2) * 1e12;
    const FilterSequence f = kalman_filter(p, t.observations);
    for (std::size_t k = 0; k < f.size(); ++k) {
        EXPECT_LT((f.filters[k].mean - f.predictives[k].mean).norm(), 1e-8);
        EXPECT_LT((f.filters[k].cov - f.predictives[k].cov).norm(), 1e-8);
    }
}

TEST(KalmanFilter, EmptySequenceThrows) { EXPECT_THROW(kalman_filter(scalar_lg_params(0, 1, 1, 1, 1, 1), {}), LengthMismatch); }

TEST(KalmanFilter, WrongObservationSizeThrows) {
    EXPECT_THROW(kalman_filter(scalar_lg_params(0, 1, 1, 1, 1, 1), {Vector::Zero(2)}), DimMismatch);
}

TEST(BackwardKernel, LimitCases) {
    Gaussian filter{Vector::Constant(1, 0.3), Matrix::Constant(1, 1, 0.7)};
    const LinearBackwardKernel zero_a = backward_kernel(filter, Matrix(Matrix::Zero(1, 1)), Matrix(Matrix::Identity(1, 1)));
    EXPECT_NEAR(zero_a.gain(0, 0), 0.0, 1e-15);
    EXPECT_NEAR(zero_a.cov(0, 0), 0.7, 1e-15);
    EXPECT_NEAR(zero_a.offset(0), 0.3, 1e-15);
    const LinearBackwardKernel huge_q =
        backward_kernel(filter, Matrix(Matrix::Constant(1, 1, 0.9)), Matrix(Matrix::Constant(1, 1, 1e12)));
    EXPECT_LT(std::abs(huge_q.gain(0, 0)), 1e-11);
    EXPECT_NEAR(huge_q.cov(0, 0), 0.7, 1e-9);
}

TEST(BackwardKernel, MatchesExplicitJointConditioning) {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const Index d = 1 + trial % 3;
        const Gaussian filter{oracle::random_matrix(d, 1, rng).col(0), oracle::random_spd(d, rng)};
        const Matrix a = oracle::random_matrix(d, d, rng) * 0.5;
        const Matrix q = oracle::random_spd(d, rng);
        // Joint of (x_{k-1}, x_k) under filter ⊗ transition.
        Gaussian joint{Vector(2 * d), Matrix(2 * d, 2 * d)};
        joint.mean << filter.mean, a * filter.mean;
        joint.cov << filter.cov, filter.cov * a.transpose(), a * filter.cov, a * filter.cov * a.transpose() + q;
        const LinearBackwardKernel kern = backward_kernel(filter, a, q);
        for (int probe = 0; probe < 3; ++probe) {
            const Vector x_next = oracle::random_matrix(d, 1, rng).col(0);
            const Matrix sxy = joint.cov.topRightCorner(d, d);
            const Matrix syy = joint.cov.bottomRightCorner(d, d);
            const Eigen::LDLT<Matrix> ldlt(syy);
            const Vector mean = filter.mean + sxy * ldlt.solve(x_next - joint.mean.tail(d));
            const Matrix cov = filter.cov - sxy * ldlt.solve(Matrix(sxy.transpose()));
            EXPECT_LT((kern.mean(x_next) - mean).norm(), 1e-10);
            EXPECT_LT((kern.cov - cov).norm(), 1e-10);
        }
    }
}

class KalmanOracle : public ::testing::TestWithParam<Case> {};

TEST_P(KalmanOracle, MatchesBruteForceJointGaussian) {
    const Case c = GetParam();
    Rng rng(100 + static_cast<std::uint64_t>(c.d * 10 + c.m) + c.n);
    const LGParams p = oracle::random_lg(c.d, c.m, rng);
    const Trajectory t = simulate_lg(p, c.n, 7);
    const ExactSmoother s = exact_smoother(p, t.observations);
    const oracle::Posterior post = oracle::brute_force_posterior(p, t.observations);

    EXPECT_NEAR(s.filter.loglik, post.loglik, 1e-8 * std::max(1.0, std::abs(post.loglik)));
    const Index d = c.d;
    for (std::size_t k = 0; k <= c.n; ++k) {
        const Index o = static_cast<Index>(k) * d;
        EXPECT_LT((s.smoothing.marginals[k].mean - post.mean.segment(o, d)).cwiseAbs().maxCoeff(), 1e-8) << k;
        EXPECT_LT((s.smoothing.marginals[k].cov - post.cov.block(o, o, d, d)).cwiseAbs().maxCoeff(), 1e-8) << k;
        if (k < c.n) {
            const Matrix pair_cov = post.cov.block(o, o, 2 * d, 2 * d);
            EXPECT_LT((s.smoothing.pairwise[k].cov - pair_cov).cwiseAbs().maxCoeff(), 1e-8) << k;
            EXPECT_LT((s.smoothing.pairwise[k].mean - post.mean.segment(o, 2 * d)).cwiseAbs().maxCoeff(), 1e-8);
        }
    }
    // The final smoothing marginal is the final filter.
    EXPECT_LT((s.smoothing.marginals[c.n].cov - s.filter.filters[c.n].cov).norm(), 1e-12);

    // Additive expectations: Σ_{k<n} x_k and Σ_{k<n} x_kᵀx_{k+1}.
    Vector sum = Vector::Zero(d);
    double cross = 0.0;
    for (std::size_t k = 0; k < c.n; ++k) {
        const Index o = static_cast<Index>(k) * d;
        sum += post.mean.segment(o, d);
        cross += post.cov.block(o, o + d, d, d).trace() + post.mean.segment(o, d).dot(post.mean.segment(o + d, d));
    }
    EXPECT_LT((smoothed_additive(s.smoothing, AdditiveFunctional::state_sum(d)) - sum).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(smoothed_additive(s.smoothing, AdditiveFunctional::cross_product(d))(0), cross, 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Shapes, KalmanOracle,
                         ::testing::Values(Case{1, 1, 16}, Case{1, 1, 32}, Case{2, 1, 16}, Case{2, 3, 24},
                                           Case{3, 2, 32}));

TEST(Smoother, CovarianceNoLargerThanFilter) {
    Rng rng(4);
    const LGParams p = oracle::random_lg(3, 2, rng);
    const Trajectory t = simulate_lg(p, 40, 5);
    const ExactSmoother s = exact_smoother(p, t.observations);
    for (std::size_t k = 0; k < t.size(); ++k)
        EXPECT_GE(min_eigenvalue(s.filter.filters[k].cov - s.smoothing.marginals[k].cov), -1e-10);
}

TEST(Smoother, NoDataGivesPriorChainMarginals) {
    Rng rng(6);
    LGParams p = oracle::random_lg(2, 1, rng);
    const Trajectory t = simulate_lg(p, 12, 8);
    p.r = Matrix::Identity(1, 1) * 1e12;
    const ExactSmoother s = exact_smoother(p, t.observations);
    Vector mean = p.a0;
    Matrix cov = p.q0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (k > 0) {
            mean = p.a * mean;
            cov = p.a * cov * p.a.transpose() + p.q;
        }
        EXPECT_LT((s.smoothing.marginals[k].mean - mean).norm(), 1e-6);
        EXPECT_LT((s.smoothing.marginals[k].cov - cov).norm(), 1e-6);
    }
}

TEST(SmoothedAdditive, CrossProductMatchesSampling) {
    const LGParams p = scalar_lg_params(0.0, 1.0, 0.9, 0.1, 1.0, 0.5);
    const std::size_t n = 10;
    const Trajectory t = simulate_lg(p, n, 9);
    const ExactSmoother s = exact_smoother(p, t.observations);
    const double exact = smoothed_additive(s.smoothing, AdditiveFunctional::cross_product(1))(0);

    // Exact joint samples by the backward factorization, drawn with Eigen's LLT on the brute-force posterior.
    const oracle::Posterior post = oracle::brute_force_posterior(p, t.observations);
    const Matrix l = Eigen::LLT<Matrix>(post.cov).matrixL();
    Rng rng(10);
    const int samples = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        Vector z(post.mean.size());
        for (Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
        const Vector x = post.mean + l * z;
        double h = 0.0;
        for (std::size_t k = 0; k < n; ++k) h += x(static_cast<Index>(k)) * x(static_cast<Index>(k) + 1);
        sum += h;
        sum2 += h * h;
    }
    const double mean = sum / samples;
    const double se = std::sqrt((sum2 / samples - mean * mean) / samples);
    EXPECT_LT(std::abs(mean - exact), 4.0 * se);
}

TEST(SmoothedAdditive, ZeroFunctionalAndUnsupportedForm) {
    const LGParams p = scalar_lg_params(0.0, 1.0, 0.9, 0.1, 1.0, 0.5);
    const ExactSmoother s = exact_smoother(p, simulate_lg(p, 5, 11).observations);
    EXPECT_EQ(smoothed_additive(s.smoothing, AdditiveFunctional::zero(1))(0), 0.0);
    const AdditiveFunctional f = AdditiveFunctional::custom(1, [](std::size_t, const Vector& x, const Vector&) {
        return Vector::Constant(1, std::sin(x(0)));
    });
    EXPECT_THROW(smoothed_additive(s.smoothing, f), UnsupportedFunctionalForm);
}

TEST(KalmanFilter, StableOverLongSequences) {
    const LGParams p = scalar_lg_params(0.0, 1.0, 0.9, 0.1, 1.0, 0.5);
    const Trajectory t = simulate_lg(p, 2000, 12);
    const ExactSmoother s = exact_smoother(p, t.observations);
    for (const auto& g : s.smoothing.marginals) {
        EXPECT_TRUE(std::isfinite(g.mean(0)));
        EXPECT_GT(g.cov(0, 0), 0.0);
    }
    EXPECT_TRUE(std::isfinite(s.filter.loglik));
}
