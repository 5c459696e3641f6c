#pragma once

#include <numbers>

#include "bvs/linalg.hpp"

namespace bvs {

class Rng;

/// Mean/covariance pair. Covariance is stored full-symmetric.
template <class T>
struct GaussianT {
    Vec<T> mean;
    Mat<T> cov;

    Index dim() const { return mean.size(); }
};

/// Exponential-family coordinates: eta2 = −½Σ⁻¹, eta1 = Σ⁻¹μ.
template <class T>
struct NaturalGaussianT {
    Vec<T> eta1;
    Mat<T> eta2;

    Index dim() const { return eta1.size(); }
};

using Gaussian = GaussianT<double>;
using NaturalGaussian = NaturalGaussianT<double>;

template <class T>
GaussianT<T> cast_gaussian(const Gaussian& g) {
    return {g.mean.template cast<T>(), g.cov.template cast<T>()};
}

template <class T>
Gaussian values_of(const GaussianT<T>& g) {
    return {values_of(g.mean), values_of(g.cov)};
}

/// Throws NotPositiveDefinite / DimMismatch unless g is a proper Gaussian
/// (symmetric to 1e-10, Cholesky succeeds, finite entries).
void validate(const Gaussian& g);

template <class T>
NaturalGaussianT<T> to_natural(const GaussianT<T>& g) {
    const Mat<T> prec = spd_inverse(g.cov);
    return {prec * g.mean, prec * -0.5};
}

template <class T>
GaussianT<T> from_natural(const NaturalGaussianT<T>& n) {
    const Mat<T> prec = n.eta2 * -2.0;
    const Mat<T> l = cholesky(prec);
    const Mat<T> cov = symmetrize<T>(cholesky_solve(l, Mat<T>(Mat<T>::Identity(n.dim(), n.dim()))));
    Mat<T> e1 = n.eta1;
    return {cholesky_solve(l, e1).col(0), cov};
}

/// Conjugation of two Gaussian factors: natural parameters add.
template <class T>
NaturalGaussianT<T> natural_product(const NaturalGaussianT<T>& a, const NaturalGaussianT<T>& b) {
    if (a.dim() != b.dim()) throw DimMismatch("natural_product operands differ in dimension");
    NaturalGaussianT<T> out{a.eta1 + b.eta1, symmetrize<T>(a.eta2 + b.eta2)};
    cholesky(Mat<T>(out.eta2 * -1.0));  // improper result otherwise
    return out;
}

/// Conditions a joint Gaussian over (x, y) (x first) on y = y_value.
template <class T>
GaussianT<T> gaussian_condition(const GaussianT<T>& joint, const Vec<T>& y_value) {
    const Index dy = y_value.size();
    const Index dx = joint.dim() - dy;
    if (dx <= 0) throw DimMismatch("conditioning block is larger than the joint");
    const Mat<T> sxx = joint.cov.topLeftCorner(dx, dx);
    const Mat<T> sxy = joint.cov.topRightCorner(dx, dy);
    const Mat<T> syy = joint.cov.bottomRightCorner(dy, dy);
    const Mat<T> l = cholesky(syy);
    // gain = Σxy Σyy⁻¹
    const Mat<T> gain_t = cholesky_solve(l, Mat<T>(sxy.transpose()));
    const Vec<T> resid = y_value - joint.mean.tail(dy);
    GaussianT<T> out;
    out.mean = joint.mean.head(dx) + gain_t.transpose() * resid;
    out.cov = symmetrize<T>(Mat<T>(sxx - gain_t.transpose() * sxy.transpose()));
    return out;
}

template <class T>
GaussianT<T> marginal(const GaussianT<T>& g, Index start, Index len) {
    return {g.mean.segment(start, len), g.cov.block(start, start, len, len)};
}

/// KL(p ‖ q), clamped at zero against round-off.
template <class T>
T gaussian_kl(const GaussianT<T>& p, const GaussianT<T>& q) {
    if (p.dim() != q.dim()) throw DimMismatch("gaussian_kl operands differ in dimension");
    const Index d = p.dim();
    const Mat<T> lq = cholesky(q.cov);
    const Mat<T> lp = cholesky(p.cov);
    const Mat<T> m = solve_lower(lq, lp);  // Lq⁻¹ Lp
    T trace = T(0.0);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) trace += m(i, j) * m(i, j);
    const Mat<T> delta = p.mean - q.mean;
    const Mat<T> z = solve_lower(lq, delta);
    T maha = T(0.0);
    for (Index i = 0; i < d; ++i) maha += z(i, 0) * z(i, 0);
    T kl = (logdet_from_cholesky(lq) - logdet_from_cholesky(lp) + trace + maha - static_cast<double>(d)) * 0.5;
    if (value_of(kl) < 0.0) return T(0.0);
    return kl;
}

template <class T>
T gaussian_log_density(const GaussianT<T>& g, const Vec<T>& x) {
    const Mat<T> l = cholesky(g.cov);
    const Mat<T> resid = x - g.mean;
    const Mat<T> z = solve_lower(l, resid);
    T maha = T(0.0);
    for (Index i = 0; i < z.rows(); ++i) maha += z(i, 0) * z(i, 0);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    return (maha + logdet_from_cholesky(l) + log2pi * static_cast<double>(g.dim())) * -0.5;
}

template <class T>
T gaussian_entropy(const GaussianT<T>& g) {
    const double c = 1.0 + std::log(2.0 * std::numbers::pi);
    return (logdet_spd(g.cov) + c * static_cast<double>(g.dim())) * 0.5;
}

/// Draws mean + L·z with z standard normal.
Vector sample_gaussian(const Gaussian& g, Rng& rng);
Vector sample_gaussian(const Vector& mean, const Matrix& chol, Rng& rng);

}  // namespace bvs
