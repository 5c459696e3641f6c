#include <cmath>
#include <functional>
#include <numbers>

#include <gtest/gtest.h>

#include "bvs/gaussian.hpp"
#include "bvs/rng.hpp"
#include "oracles.hpp"

using namespace bvs;

namespace {

double density_1d(double x, double mean, double var) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Trapezoid rule on a uniform grid.
double integrate(const std::function<double(double)>& f, double lo, double hi, int steps = 20000) {
    const double h = (hi - lo) / steps;
    double s = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < steps; ++i) s += f(lo + i * h);
    return s * h;
}

Gaussian g1(double mean, double var) { return {Vector::Constant(1, mean), Matrix::Constant(1, 1, var)}; }

}  // namespace

TEST(Cholesky, IdentityIsItsOwnFactor) {
    const Matrix eye = Matrix::Identity(2, 2);
    EXPECT_TRUE(cholesky(eye).isApprox(eye));
}

TEST(Cholesky, TwoByTwoExample) {
    Matrix m(2, 2);
    m << 4, 2, 2, 3;
    const Matrix l = cholesky(m);
    Matrix expected(2, 2);
    expected << 2, 0, 1, std::sqrt(2.0);
    EXPECT_LT((l - expected).norm(), 1e-14);
    EXPECT_LT((l * l.transpose() - m).norm(), 1e-14);
}

TEST(Cholesky, IndefiniteThrows) {
    Matrix m(2, 2);
    m << 1, 2, 2, 1;
    EXPECT_THROW(cholesky(m), NotPositiveDefinite);
}

TEST(Cholesky, PivotBelowToleranceThrows) {
    Matrix m = Matrix::Identity(2, 2);
    m(1, 1) = 1e-13;
    EXPECT_THROW(cholesky(m), NotPositiveDefinite);
    m(1, 1) = 1e-11;
    EXPECT_NO_THROW(cholesky(m));
}

TEST(Cholesky, RandomReconstruction) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Index d = 1 + trial % 4;
        const Matrix m = oracle::random_spd(d, rng, 0.05);
        const Matrix l = cholesky(m);
        EXPECT_LT(relative_frobenius(l * l.transpose(), m), 1e-10);
        EXPECT_TRUE(l.isLowerTriangular());
    }
}

TEST(Linalg, SolvesAndLogdetMatchEigen) {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const Index d = 1 + trial % 4;
        const Matrix m = oracle::random_spd(d, rng);
        const Matrix b = oracle::random_matrix(d, 3, rng);
        const Eigen::LLT<Matrix> llt(m);
        EXPECT_LT((spd_solve(m, b) - llt.solve(b)).norm(), 1e-10);
        EXPECT_LT((spd_inverse(m) - llt.solve(Matrix::Identity(d, d))).norm(), 1e-10);
        EXPECT_NEAR(logdet_spd(m), std::log(m.determinant()), 1e-10);
    }
}

TEST(GaussianCondition, IndependentBlocksLeaveMarginal) {
    Gaussian joint{Vector::Zero(3), Matrix::Identity(3, 3)};
    joint.mean << 1.0, -2.0, 5.0;
    joint.cov(0, 1) = joint.cov(1, 0) = 0.3;
    joint.cov(2, 2) = 4.0;
    const Gaussian c = gaussian_condition(joint, Vector(Vector::Constant(1, 17.0)));
    EXPECT_TRUE(c.mean.isApprox(joint.mean.head(2)));
    EXPECT_TRUE(c.cov.isApprox(joint.cov.topLeftCorner(2, 2)));
}

TEST(GaussianCondition, BivariateExampleAgainstGridRegression) {
    Gaussian joint{Vector::Zero(2), Matrix::Identity(2, 2)};
    joint.cov(0, 1) = joint.cov(1, 0) = 0.5;
    const Gaussian c = gaussian_condition(joint, Vector(Vector::Constant(1, 1.0)));
    EXPECT_NEAR(c.mean(0), 0.5, 1e-14);
    EXPECT_NEAR(c.cov(0, 0), 0.75, 1e-14);

    // Conditional moments of x given y = 1 by normalizing the joint density on a grid.
    auto joint_pdf = [&](double x) {
        Vector v(2);
        v << x, 1.0;
        return std::exp(oracle::log_normal(v, joint.mean, joint.cov));
    };
    const double z = integrate(joint_pdf, -12, 12);
    const double m1 = integrate([&](double x) { return x * joint_pdf(x); }, -12, 12) / z;
    const double m2 = integrate([&](double x) { return x * x * joint_pdf(x); }, -12, 12) / z;
    EXPECT_NEAR(c.mean(0), m1, 1e-4);
    EXPECT_NEAR(c.cov(0, 0), m2 - m1 * m1, 1e-4);
}

TEST(GaussianCondition, ObservingTheMeanKeepsTheMean) {
    Rng rng(13);
    Gaussian joint{oracle::random_matrix(4, 1, rng).col(0), oracle::random_spd(4, rng)};
    const Gaussian c = gaussian_condition(joint, Vector(joint.mean.tail(2)));
    EXPECT_LT((c.mean - joint.mean.head(2)).norm(), 1e-12);
}

TEST(GaussianCondition, SingularObservationBlockThrows) {
    Gaussian joint{Vector::Zero(2), Matrix::Identity(2, 2)};
    joint.cov(1, 1) = 0.0;
    EXPECT_THROW(gaussian_condition(joint, Vector(Vector::Zero(1))), NotPositiveDefinite);
}

TEST(GaussianKl, ZeroForIdenticalArguments) {
    Rng rng(14);
    const Gaussian p{oracle::random_matrix(3, 1, rng).col(0), oracle::random_spd(3, rng)};
    EXPECT_NEAR(gaussian_kl(p, p), 0.0, 1e-12);
}

TEST(GaussianKl, OneDimensionalExamplesAgainstQuadrature) {
    auto kl_quad = [](double m1, double v1, double m2, double v2) {
        return integrate(
            [&](double x) {
                const double p = density_1d(x, m1, v1);
                return p > 0 ? p * (std::log(p) - std::log(density_1d(x, m2, v2))) : 0.0;
            },
            -20, 20);
    };
    EXPECT_NEAR(gaussian_kl(g1(0, 1), g1(1, 1)), 0.5, 1e-12);
    EXPECT_NEAR(gaussian_kl(g1(0, 1), g1(1, 1)), kl_quad(0, 1, 1, 1), 1e-6);
    EXPECT_NEAR(gaussian_kl(g1(0, 1), g1(0, 2)), 0.5 * (std::log(2.0) + 0.5 - 1.0), 1e-12);
    EXPECT_NEAR(gaussian_kl(g1(0, 1), g1(0, 2)), kl_quad(0, 1, 0, 2), 1e-6);
}

TEST(GaussianKl, NonnegativeOnRandomPairs) {
    Rng rng(15);
    for (int trial = 0; trial < 100; ++trial) {
        const Index d = 1 + trial % 4;
        const Gaussian p{oracle::random_matrix(d, 1, rng).col(0), oracle::random_spd(d, rng)};
        const Gaussian q{oracle::random_matrix(d, 1, rng).col(0), oracle::random_spd(d, rng)};
        EXPECT_GE(gaussian_kl(p, q), 0.0);
        EXPECT_GT(gaussian_kl(p, q), 1e-12);
    }
}

TEST(NaturalProduct, SelfProductHalvesVariance) {
    const NaturalGaussian a{Vector::Zero(2), Matrix::Identity(2, 2) * -0.5};
    const NaturalGaussian c = natural_product(a, a);
    EXPECT_TRUE(c.eta1.isZero());
    EXPECT_TRUE(c.eta2.isApprox(-Matrix::Identity(2, 2)));
    EXPECT_TRUE(from_natural(c).cov.isApprox(Matrix::Identity(2, 2) * 0.5));
}

TEST(NaturalProduct, ProductOfUnitGaussiansAgainstGrid) {
    const Gaussian c = from_natural(natural_product(to_natural(g1(1, 1)), to_natural(g1(3, 1))));
    EXPECT_NEAR(c.mean(0), 2.0, 1e-12);
    EXPECT_NEAR(c.cov(0, 0), 0.5, 1e-12);

    auto prod = [](double x) { return density_1d(x, 1, 1) * density_1d(x, 3, 1); };
    const double z = integrate(prod, -15, 20);
    const double m1 = integrate([&](double x) { return x * prod(x); }, -15, 20) / z;
    const double m2 = integrate([&](double x) { return x * x * prod(x); }, -15, 20) / z;
    EXPECT_NEAR(m1, c.mean(0), 1e-6);
    EXPECT_NEAR(m2 - m1 * m1, c.cov(0, 0), 1e-6);
}

TEST(NaturalProduct, CommutativeAndAssociative) {
    Rng rng(16);
    auto random_natural = [&](Index d) {
        return to_natural(Gaussian{oracle::random_matrix(d, 1, rng).col(0), oracle::random_spd(d, rng)});
    };
    for (int trial = 0; trial < 20; ++trial) {
        const Index d = 1 + trial % 3;
        const NaturalGaussian a = random_natural(d), b = random_natural(d), c = random_natural(d);
        const NaturalGaussian ab = natural_product(a, b), ba = natural_product(b, a);
        EXPECT_LT((ab.eta1 - ba.eta1).norm(), 1e-12);
        EXPECT_LT((ab.eta2 - ba.eta2).norm(), 1e-12);
        const NaturalGaussian l = natural_product(ab, c), r = natural_product(a, natural_product(b, c));
        EXPECT_LT((l.eta1 - r.eta1).norm(), 1e-12);
        EXPECT_LT((l.eta2 - r.eta2).norm(), 1e-12);
    }
}

TEST(NaturalProduct, ImproperResultThrows) {
    const NaturalGaussian a{Vector::Zero(1), Matrix::Constant(1, 1, -0.5)};
    const NaturalGaussian b{Vector::Zero(1), Matrix::Constant(1, 1, 1.0)};
    EXPECT_THROW(natural_product(a, b), NotPositiveDefinite);
}

TEST(Gaussian, NaturalRoundTrip) {
    Rng rng(17);
    const Gaussian g{oracle::random_matrix(3, 1, rng).col(0), oracle::random_spd(3, rng)};
    const Gaussian back = from_natural(to_natural(g));
    EXPECT_LT((back.mean - g.mean).norm(), 1e-10);
    EXPECT_LT((back.cov - g.cov).norm(), 1e-10);
}

TEST(Gaussian, LogDensityAndEntropyMatchOracle) {
    Rng rng(18);
    const Gaussian g{oracle::random_matrix(3, 1, rng).col(0), oracle::random_spd(3, rng)};
    const Vector x = oracle::random_matrix(3, 1, rng).col(0);
    EXPECT_NEAR(gaussian_log_density(g, x), oracle::log_normal(x, g.mean, g.cov), 1e-10);
    const double expected = 0.5 * std::log(std::pow(2.0 * std::numbers::pi * std::numbers::e, 3) * g.cov.determinant());
    EXPECT_NEAR(gaussian_entropy(g), expected, 1e-10);
}

TEST(Gaussian, ValidateRejectsAsymmetricCovariance) {
    Gaussian g{Vector::Zero(2), Matrix::Identity(2, 2)};
    g.cov(0, 1) = 0.5;
    EXPECT_THROW(validate(g), Error);
}

TEST(Gaussian, SampleMomentsMatch) {
    Rng rng(19);
    Gaussian g{Vector::Zero(2), Matrix::Identity(2, 2)};
    g.mean << 1.0, -1.0;
    g.cov << 2.0, 0.6, 0.6, 1.0;
    const int n = 200000;
    Vector sum = Vector::Zero(2);
    Matrix outer = Matrix::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
        const Vector x = sample_gaussian(g, rng);
        sum += x;
        outer += x * x.transpose();
    }
    const Vector mean = sum / n;
    const Matrix cov = outer / n - mean * mean.transpose();
    EXPECT_LT((mean - g.mean).norm(), 0.02);
    EXPECT_LT((cov - g.cov).norm(), 0.03);
}

TEST(Rng, StreamsAreDeterministicAndDistinct) {
    Rng a = Rng::stream(5, 0), b = Rng::stream(5, 0), c = Rng::stream(5, 1);
    const double xa = a.normal(), xb = b.normal(), xc = c.normal();
    EXPECT_EQ(xa, xb);
    EXPECT_NE(xa, xc);
    EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
}
