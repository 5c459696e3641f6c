#pragma once

#include <vector>

#include "bvs/additive.hpp"
#include "bvs/ssm.hpp"

namespace bvs {

template <class T>
struct FilterSequenceT {
    std::vector<GaussianT<T>> predictives;  ///< p(x_k | y_{0:k-1}); entry 0 is the prior
    std::vector<GaussianT<T>> filters;      ///< p(x_k | y_{0:k})
    T loglik = T(0.0);

    std::size_t size() const { return filters.size(); }
};

using FilterSequence = FilterSequenceT<double>;

/// x_{k-1} | x_k ~ N(gain x_k + offset, cov).
template <class T>
struct LinearBackwardKernelT {
    Mat<T> gain;
    Vec<T> offset;
    Mat<T> cov;

    Vec<T> mean(const Vec<T>& x_next) const { return gain * x_next + offset; }
};

using LinearBackwardKernel = LinearBackwardKernelT<double>;

template <class T>
struct SmoothingT {
    std::vector<GaussianT<T>> marginals;  ///< x_0..x_n
    std::vector<GaussianT<T>> pairwise;   ///< entry k is the joint of (x_k, x_{k+1})
};

using Smoothing = SmoothingT<double>;

namespace detail {

template <class T>
GaussianT<T> kalman_update(const GaussianT<T>& pred, const Mat<T>& b, const Mat<T>& r, const Vector& y, T& loglik) {
    const Index d = pred.dim();
    const Mat<T> pbt = pred.cov * b.transpose();
    const Mat<T> s = symmetrize<T>(Mat<T>(b * pbt + r));
    const Mat<T> ls = cholesky(s);
    const Vec<T> innov = y.template cast<T>() - b * pred.mean;
    loglik += gaussian_log_density<T>({Vec<T>::Zero(innov.size()), s}, innov);
    // K = P Bᵀ S⁻¹
    const Mat<T> k = cholesky_solve(ls, Mat<T>(pbt.transpose())).transpose();
    const Mat<T> ikb = Mat<T>(Mat<T>::Identity(d, d)) - k * b;
    GaussianT<T> out;
    out.mean = pred.mean + k * innov;
    out.cov = symmetrize<T>(Mat<T>(ikb * pred.cov * ikb.transpose() + k * r * k.transpose()));
    return out;
}

}  // namespace detail

/// Predict/update recursion with Joseph-form covariance updates.
template <class T>
FilterSequenceT<T> kalman_filter(const LGParamsT<T>& p, const std::vector<Vector>& y) {
    if (y.empty()) throw LengthMismatch("kalman_filter needs at least one observation");
    for (const auto& yk : y)
        if (yk.size() != p.obs_dim()) throw DimMismatch("observation dimension differs from the model");
    FilterSequenceT<T> out;
    out.predictives.reserve(y.size());
    out.filters.reserve(y.size());
    GaussianT<T> pred = p.prior();
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (k > 0) {
            const GaussianT<T>& f = out.filters.back();
            pred.mean = p.a * f.mean;
            pred.cov = symmetrize<T>(Mat<T>(p.a * f.cov * p.a.transpose() + p.q));
        }
        out.predictives.push_back(pred);
        out.filters.push_back(detail::kalman_update(pred, p.b, p.r, y[k], out.loglik));
    }
    return out;
}

/// Kernel k-1|k obtained by conditioning the joint of (x_{k-1}, x_k) under
/// the filter at k-1 and a linear-Gaussian transition (a, q).
template <class T>
LinearBackwardKernelT<T> backward_kernel(const GaussianT<T>& filter, const Mat<T>& a, const Mat<T>& q) {
    const Mat<T> sat = filter.cov * a.transpose();
    const Mat<T> pred_cov = symmetrize<T>(Mat<T>(a * sat + q));
    // G = Σ Aᵀ (A Σ Aᵀ + Q)⁻¹
    const Mat<T> g = cholesky_solve(cholesky(pred_cov), Mat<T>(sat.transpose())).transpose();
    LinearBackwardKernelT<T> kernel;
    kernel.gain = g;
    kernel.offset = filter.mean - g * (a * filter.mean);
    kernel.cov = symmetrize<T>(Mat<T>(filter.cov - g * sat.transpose()));
    cholesky(kernel.cov);
    return kernel;
}

/// Entry k-1 is the kernel of x_{k-1} | x_k, for k = 1..n.
template <class T>
std::vector<LinearBackwardKernelT<T>> backward_kernels(const LGParamsT<T>& p, const FilterSequenceT<T>& filters) {
    std::vector<LinearBackwardKernelT<T>> out;
    if (filters.size() < 2) return out;
    out.reserve(filters.size() - 1);
    for (std::size_t k = 1; k < filters.size(); ++k) out.push_back(backward_kernel(filters.filters[k - 1], p.a, p.q));
    return out;
}

/// Marginals and pairwise marginals of the backward-factorized law
/// final ⊗ kernels[n-1] ⊗ ... ⊗ kernels[0].
template <class T>
SmoothingT<T> smoother_pass(const GaussianT<T>& final_marginal, const std::vector<LinearBackwardKernelT<T>>& kernels) {
    const std::size_t n = kernels.size();
    const Index d = final_marginal.dim();
    SmoothingT<T> out;
    out.marginals.resize(n + 1);
    out.pairwise.resize(n);
    out.marginals[n] = final_marginal;
    for (std::size_t k = n; k > 0; --k) {
        const LinearBackwardKernelT<T>& kern = kernels[k - 1];
        if (kern.gain.rows() != d || kern.gain.cols() != d) throw DimMismatch("kernel gain shape");
        const GaussianT<T>& next = out.marginals[k];
        const Mat<T> gp = kern.gain * next.cov;
        GaussianT<T> prev;
        prev.mean = kern.mean(next.mean);
        prev.cov = symmetrize<T>(Mat<T>(gp * kern.gain.transpose() + kern.cov));
        GaussianT<T> pair;
        pair.mean.resize(2 * d);
        pair.mean << prev.mean, next.mean;
        pair.cov.resize(2 * d, 2 * d);
        pair.cov << prev.cov, gp, gp.transpose(), next.cov;
        out.marginals[k - 1] = std::move(prev);
        out.pairwise[k - 1] = std::move(pair);
    }
    return out;
}

/// Exact filter, kernels and smoothing for one observation sequence.
struct ExactSmoother {
    FilterSequence filter;
    std::vector<LinearBackwardKernel> kernels;
    Smoothing smoothing;
};

ExactSmoother exact_smoother(const LGParams& params, const std::vector<Vector>& y);

/// Σ_k E[h̃_k(X_k, X_{k+1})] under the pairwise marginals. Requires a closed form.
Vector smoothed_additive(const Smoothing& smoothing, const AdditiveFunctional& f);

}  // namespace bvs
