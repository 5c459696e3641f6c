#pragma once

#include <numbers>
#include <vector>

#include "bvs/kalman.hpp"

namespace bvs {

/// q(x_{0:n}) = terminal(x_n) Π_k kernels[k-1](x_{k-1} | x_k).
/// `marginals` optionally carries per-step densities q_k (k = 0..n) used by
/// the recursive ELBO; when present its last entry must equal `terminal`.
template <class T>
struct BackwardVariationalT {
    GaussianT<T> terminal;
    std::vector<LinearBackwardKernelT<T>> kernels;
    std::vector<GaussianT<T>> marginals;

    std::size_t horizon() const { return kernels.size(); }
};

using BackwardVariational = BackwardVariationalT<double>;

/// Backward and filtering densities of the linear-Gaussian model `lambda` on y.
template <class T>
BackwardVariationalT<T> variational_from_model(const LGParamsT<T>& lambda, const std::vector<Vector>& y) {
    FilterSequenceT<T> filt = kalman_filter(lambda, y);
    BackwardVariationalT<T> q;
    q.kernels = backward_kernels(lambda, filt);
    q.terminal = filt.filters.back();
    q.marginals = std::move(filt.filters);
    return q;
}

template <class T>
SmoothingT<T> variational_smoothing(const BackwardVariationalT<T>& q) {
    return smoother_pass(q.terminal, q.kernels);
}

Vector variational_smoothed_additive(const BackwardVariational& q, const AdditiveFunctional& f);

/// log N(F z + f; 0, Σ) written as a quadratic form in z.
template <class T>
QuadraticFormT<T> log_normal_form(const Mat<T>& f_mat, const Vec<T>& f_vec, const Mat<T>& sigma) {
    const Mat<T> l = cholesky(sigma);
    const Mat<T> w = solve_lower(l, f_mat);  // L⁻¹F
    const Mat<T> fv = f_vec;
    const Mat<T> v = solve_lower(l, fv);     // L⁻¹f
    const double log2pi = std::log(2.0 * std::numbers::pi);
    QuadraticFormT<T> q;
    q.p = symmetrize<T>(Mat<T>(w.transpose() * w * -0.5));
    q.b = (w.transpose() * v).col(0) * -1.0;
    q.c = (v.col(0).dot(v.col(0)) + logdet_from_cholesky(l) + log2pi * static_cast<double>(sigma.rows())) * -0.5;
    return q;
}

/// E[log N(F Z + f; 0, Σ)] for Z ~ z.
template <class T>
T expected_log_normal(const GaussianT<T>& z, const Mat<T>& f_mat, const Vec<T>& f_vec, const Mat<T>& sigma) {
    return log_normal_form(f_mat, f_vec, sigma).expectation(z);
}

/// Entropy of a Gaussian kernel with covariance S: ½ log|2πe S|.
template <class T>
T kernel_entropy(const Mat<T>& cov) {
    return gaussian_entropy<T>({Vec<T>::Zero(cov.rows()), cov});
}

/// E_q[log p^θ(X, Y)] + H(q), each term in closed form over the pairwise
/// marginals of q.
template <class T>
T elbo_closed_form(const LGParamsT<T>& theta, const BackwardVariationalT<T>& q, const std::vector<Vector>& y) {
    const std::size_t n = q.horizon();
    if (y.size() != n + 1) throw LengthMismatch("observation count must be horizon + 1");
    const Index d = theta.state_dim();
    const SmoothingT<T> s = variational_smoothing(q);
    const Mat<T> eye = Mat<T>::Identity(d, d);

    T elbo = expected_log_normal<T>(s.marginals[0], eye, Vec<T>(-theta.a0), theta.q0);
    for (std::size_t k = 0; k <= n; ++k)
        elbo += expected_log_normal<T>(s.marginals[k], Mat<T>(-theta.b), Vec<T>(y[k].template cast<T>()), theta.r);
    if (n > 0) {
        Mat<T> f_trans(d, 2 * d);
        f_trans << -theta.a, eye;
        const Vec<T> zero = Vec<T>::Zero(d);
        for (std::size_t k = 0; k < n; ++k) elbo += expected_log_normal<T>(s.pairwise[k], f_trans, zero, theta.q);
    }
    elbo += gaussian_entropy(q.terminal);
    for (const auto& kern : q.kernels) elbo += kernel_entropy(kern.cov);
    return elbo;
}

template <class T>
T elbo_closed_form(const LGParamsT<T>& theta, const LGParamsT<T>& lambda, const std::vector<Vector>& y) {
    return elbo_closed_form(theta, variational_from_model(lambda, y), y);
}

template <class T>
struct ElboRecursionT {
    T elbo = T(0.0);
    std::vector<QuadraticFormT<T>> statistics;  ///< T_0..T_n as quadratic forms in x_k
};

using ElboRecursion = ElboRecursionT<double>;

namespace detail {

/// E over x_{k-1} ~ kernel(· | x_k) of a quadratic form in (x_{k-1}, x_k).
template <class T>
QuadraticFormT<T> integrate_backward(const QuadraticFormT<T>& pair_form, const LinearBackwardKernelT<T>& kern) {
    const Index d = kern.gain.rows();
    Mat<T> lift(2 * d, d);
    lift << kern.gain, Mat<T>::Identity(d, d);
    Vec<T> shift(2 * d);
    shift << kern.offset, Vec<T>::Zero(d);
    const Mat<T> pl = pair_form.p * lift;
    const Vec<T> pe = pair_form.p * shift;
    QuadraticFormT<T> out;
    out.p = symmetrize<T>(Mat<T>(lift.transpose() * pl));
    out.b = lift.transpose() * pe * 2.0 + lift.transpose() * pair_form.b;
    T tr = T(0.0);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) tr += pair_form.p(i, j) * kern.cov(j, i);
    out.c = shift.dot(pe) + pair_form.b.dot(shift) + pair_form.c + tr;
    return out;
}

template <class T>
QuadraticFormT<T> embed_first(const QuadraticFormT<T>& f, Index d) {
    QuadraticFormT<T> out = QuadraticFormT<T>::zero(2 * d);
    out.p.topLeftCorner(d, d) = f.p;
    out.b.head(d) = f.b;
    out.c = f.c;
    return out;
}

template <class T>
QuadraticFormT<T> negate(QuadraticFormT<T> f) {
    f.p = f.p * -1.0;
    f.b = f.b * -1.0;
    f.c = f.c * -1.0;
    return f;
}

}  // namespace detail

/// Propagates T_k(x_k) = E_{q_{k-1|k}}[T_{k-1} + log ℓ_k + log q_{k-1} − log q_{k-1|k} − log q_k | x_k]
/// and returns E_{q_n}[T_n]. Requires q.marginals (q_0..q_n).
template <class T>
ElboRecursionT<T> elbo_recursive(const LGParamsT<T>& theta, const BackwardVariationalT<T>& q,
                                 const std::vector<Vector>& y) {
    const std::size_t n = q.horizon();
    if (y.size() != n + 1) throw LengthMismatch("observation count must be horizon + 1");
    if (q.marginals.size() != n + 1) throw LengthMismatch("recursive ELBO needs per-step marginals q_0..q_n");
    const Index d = theta.state_dim();
    const Mat<T> eye = Mat<T>::Identity(d, d);
    const Mat<T> zero_dd = Mat<T>::Zero(d, d);
    const Vec<T> zero_d = Vec<T>::Zero(d);

    ElboRecursionT<T> out;
    QuadraticFormT<T> t = log_normal_form<T>(eye, Vec<T>(-theta.a0), theta.q0);
    t += log_normal_form<T>(Mat<T>(-theta.b), Vec<T>(y[0].template cast<T>()), theta.r);
    t += detail::negate(log_normal_form<T>(eye, Vec<T>(-q.marginals[0].mean), q.marginals[0].cov));
    out.statistics.push_back(t);

    Mat<T> f_trans(d, 2 * d);
    f_trans << -theta.a, eye;
    Mat<T> pick_prev(d, 2 * d);
    pick_prev << eye, zero_dd;
    Mat<T> pick_next(d, 2 * d);
    pick_next << zero_dd, eye;
    Mat<T> emit(theta.obs_dim(), 2 * d);
    emit << Mat<T>::Zero(theta.obs_dim(), d), -theta.b;

    for (std::size_t k = 1; k <= n; ++k) {
        QuadraticFormT<T> pair = detail::embed_first(t, d);
        pair += log_normal_form<T>(f_trans, zero_d, theta.q);
        pair += log_normal_form<T>(emit, Vec<T>(y[k].template cast<T>()), theta.r);
        pair += log_normal_form<T>(pick_prev, Vec<T>(-q.marginals[k - 1].mean), q.marginals[k - 1].cov);
        pair += detail::negate(log_normal_form<T>(pick_next, Vec<T>(-q.marginals[k].mean), q.marginals[k].cov));
        const LinearBackwardKernelT<T>& kern = q.kernels[k - 1];
        t = detail::integrate_backward(pair, kern);
        t.c += kernel_entropy(kern.cov);
        out.statistics.push_back(t);
    }
    out.elbo = t.expectation(q.terminal);
    return out;
}

template <class T>
struct CkProfileT {
    std::vector<T> values;             ///< c_0..c_n
    std::vector<GaussianT<T>> rho_hats;
};

using CkProfile = CkProfileT<double>;

/// KL values below this are rounding noise of the log-determinant and trace terms.
inline constexpr double kKlRoundoff = 1e-12;

/// 2·min(1, √(KL/2)); KL under kKlRoundoff maps to 0.
template <class T>
T pinsker_ck(const T& kl) {
    using std::sqrt;
    const double half = 0.5 * value_of(kl);
    if (half >= 1.0) return T(2.0);
    if (value_of(kl) < kKlRoundoff) return T(0.0);
    return sqrt(kl * 0.5) * 2.0;
}

/// c_k for the linear-Gaussian case. rho_hats empty selects ρ̂_k = q_k^λ.
template <class T>
CkProfileT<T> ck_linear(const LGParamsT<T>& theta, const LGParamsT<T>& lambda, std::vector<GaussianT<T>> rho_hats,
                        const std::vector<Vector>& y) {
    const BackwardVariationalT<T> q = variational_from_model(lambda, y);
    const std::size_t n = q.horizon();
    if (rho_hats.empty()) rho_hats = q.marginals;
    if (rho_hats.size() != n + 1) throw LengthMismatch("need one rho_hat per time step");
    {
        const Gaussian last = values_of(rho_hats.back());
        const Gaussian qn = values_of(q.terminal);
        if ((last.mean - qn.mean).norm() > 1e-10 || (last.cov - qn.cov).norm() > 1e-10)
            throw InvalidArgument("rho_hat at the final time must equal the variational terminal marginal");
    }
    const Index d = theta.state_dim();
    const Index m = theta.obs_dim();

    CkProfileT<T> out;
    const FilterSequenceT<T> truth = kalman_filter(theta, std::vector<Vector>{y.front()});
    out.values.push_back(pinsker_ck(gaussian_kl(rho_hats[0], truth.filters[0])));

    for (std::size_t k = 1; k <= n; ++k) {
        // ρ̂_k ⊗ q_{k-1|k} over (x_{k-1}, x_k)
        const auto& kern = q.kernels[k - 1];
        const GaussianT<T>& rk = rho_hats[k];
        const Mat<T> gp = kern.gain * rk.cov;
        GaussianT<T> j1;
        j1.mean.resize(2 * d);
        j1.mean << kern.mean(rk.mean), rk.mean;
        j1.cov.resize(2 * d, 2 * d);
        j1.cov << symmetrize<T>(Mat<T>(gp * kern.gain.transpose() + kern.cov)), gp, gp.transpose(), rk.cov;

        // ρ̂_{k-1}(x_{k-1}) m(x_{k-1}, x_k) g_k(x_k), normalized
        const GaussianT<T>& rp = rho_hats[k - 1];
        const Mat<T> ac = theta.a * rp.cov;
        const Mat<T> xx = symmetrize<T>(Mat<T>(ac * theta.a.transpose() + theta.q));
        GaussianT<T> full;
        full.mean.resize(2 * d + m);
        full.mean << rp.mean, theta.a * rp.mean, theta.b * theta.a * rp.mean;
        full.cov.resize(2 * d + m, 2 * d + m);
        full.cov << rp.cov, ac.transpose(), ac.transpose() * theta.b.transpose(), ac, xx, xx * theta.b.transpose(),
            theta.b * ac, theta.b * xx, symmetrize<T>(Mat<T>(theta.b * xx * theta.b.transpose() + theta.r));
        const GaussianT<T> j2 = gaussian_condition(full, Vec<T>(y[k].template cast<T>()));
        out.values.push_back(pinsker_ck(gaussian_kl(j1, j2)));
    }
    out.rho_hats = std::move(rho_hats);
    return out;
}

/// Right-hand side of the additive-error bound:
/// 2(σ+/σ−) Σ_k h_k (c_0 + Σ_{m≤k} ρ^{k−m+1} c_m + c_{k+1} + Σ_{m≥k+2} ρ^{m−k−1} c_m).
double prop1_rhs(const std::vector<double>& ck, double sigma_minus, double sigma_plus,
                 const std::vector<double>& h_inf_per_step);

/// Linear-growth line 4(σ+/σ−)(1 + ρ/(1−ρ)) c₊ h∞ n.
double linear_growth_bound(double c_plus, double h_inf, double sigma_minus, double sigma_plus, std::size_t n);

}  // namespace bvs
