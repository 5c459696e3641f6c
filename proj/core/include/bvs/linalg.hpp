#pragma once

// Dense small-dimension linear algebra shared by the exact and the
// differentiable code paths. Everything is templated on the scalar so the
// same routines run on double and on ad::Var.

#include <cmath>

#include <Eigen/Dense>

#include "bvs/error.hpp"

namespace bvs {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

/// Smallest admissible Cholesky pivot (absolute).
inline constexpr double kPivotTolerance = 1e-12;

inline double value_of(double x) { return x; }

template <class T>
Mat<double> values_of(const Mat<T>& m) {
    Mat<double> out(m.rows(), m.cols());
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) out(i, j) = value_of(m(i, j));
    return out;
}

template <class T>
Vec<double> values_of(const Vec<T>& v) {
    Vec<double> out(v.size());
    for (Index i = 0; i < v.size(); ++i) out(i) = value_of(v(i));
    return out;
}

template <class T>
Mat<T> symmetrize(const Mat<T>& m) {
    Mat<T> out = m;
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = i + 1; j < m.cols(); ++j) {
            T avg = (m(i, j) + m(j, i)) * 0.5;
            out(i, j) = avg;
            out(j, i) = avg;
        }
    return out;
}

/// Lower-triangular factor L with L·Lᵀ = m. Only the lower triangle of m is read.
/// Throws NotPositiveDefinite when a pivot falls below kPivotTolerance.
template <class T>
Mat<T> cholesky(const Mat<T>& m) {
    using std::sqrt;
    if (m.rows() != m.cols()) throw DimMismatch("cholesky of a non-square matrix");
    const Index n = m.rows();
    Mat<T> l = Mat<T>::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        T pivot = m(j, j);
        for (Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
        const double pv = value_of(pivot);
        if (!std::isfinite(pv) || pv < kPivotTolerance)
            throw NotPositiveDefinite("pivot " + std::to_string(pv) + " at index " + std::to_string(j));
        l(j, j) = sqrt(pivot);
        for (Index i = j + 1; i < n; ++i) {
            T s = m(i, j);
            for (Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

/// Solves L·X = B for lower-triangular L.
template <class T>
Mat<T> solve_lower(const Mat<T>& l, const Mat<T>& b) {
    const Index n = l.rows();
    Mat<T> x = b;
    for (Index c = 0; c < b.cols(); ++c)
        for (Index i = 0; i < n; ++i) {
            T s = x(i, c);
            for (Index k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
            x(i, c) = s / l(i, i);
        }
    return x;
}

/// Solves Lᵀ·X = B for lower-triangular L.
template <class T>
Mat<T> solve_lower_transpose(const Mat<T>& l, const Mat<T>& b) {
    const Index n = l.rows();
    Mat<T> x = b;
    for (Index c = 0; c < b.cols(); ++c)
        for (Index i = n - 1; i >= 0; --i) {
            T s = x(i, c);
            for (Index k = i + 1; k < n; ++k) s -= l(k, i) * x(k, c);
            x(i, c) = s / l(i, i);
        }
    return x;
}

template <class T>
Mat<T> cholesky_solve(const Mat<T>& l, const Mat<T>& b) {
    return solve_lower_transpose(l, solve_lower(l, b));
}

template <class T>
Mat<T> spd_solve(const Mat<T>& m, const Mat<T>& b) {
    return cholesky_solve(cholesky(m), b);
}

template <class T>
Vec<T> spd_solve(const Mat<T>& m, const Vec<T>& b) {
    Mat<T> bm = b;
    return cholesky_solve(cholesky(m), bm).col(0);
}

template <class T>
Mat<T> spd_inverse(const Mat<T>& m) {
    return symmetrize<T>(spd_solve(m, Mat<T>(Mat<T>::Identity(m.rows(), m.rows()))));
}

template <class T>
T logdet_from_cholesky(const Mat<T>& l) {
    using std::log;
    T s = T(0.0);
    for (Index i = 0; i < l.rows(); ++i) s += log(l(i, i));
    return s * 2.0;
}

template <class T>
T logdet_spd(const Mat<T>& m) {
    return logdet_from_cholesky(cholesky(m));
}

/// Smallest eigenvalue of a symmetric double matrix.
double min_eigenvalue(const Matrix& symmetric);

/// Relative Frobenius distance ‖a − b‖ / max(‖b‖, tiny).
double relative_frobenius(const Matrix& a, const Matrix& b);

}  // namespace bvs
