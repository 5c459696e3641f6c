#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "bvs/gaussian.hpp"

namespace bvs {

/// T(x) = xᵀPx + bᵀx + c.
template <class T>
struct QuadraticFormT {
    Mat<T> p;
    Vec<T> b;
    T c = T(0.0);

    static QuadraticFormT zero(Index d) { return {Mat<T>::Zero(d, d), Vec<T>::Zero(d), T(0.0)}; }

    Index dim() const { return b.size(); }

    T evaluate(const Vec<T>& x) const { return x.dot(p * x) + b.dot(x) + c; }

    /// E[T(X)] for X ~ g: tr(PΣ) + μᵀPμ + bᵀμ + c.
    T expectation(const GaussianT<T>& g) const {
        T tr = T(0.0);
        for (Index i = 0; i < p.rows(); ++i)
            for (Index j = 0; j < p.cols(); ++j) tr += p(i, j) * g.cov(j, i);
        return tr + g.mean.dot(p * g.mean) + b.dot(g.mean) + c;
    }

    QuadraticFormT& operator+=(const QuadraticFormT& o) {
        p += o.p;
        b += o.b;
        c += o.c;
        return *this;
    }
};

using QuadraticForm = QuadraticFormT<double>;

/// x ↦ sum_k h̃_k(x_k, x_{k+1}) for k = 0..n−1.
struct AdditiveFunctional {
    using Term = std::function<Vector(std::size_t k, const Vector& x, const Vector& x_next)>;
    /// One quadratic form per output coordinate, over z = (x_k, x_{k+1}).
    using QuadraticTerms = std::function<std::vector<QuadraticForm>(std::size_t k)>;

    Index out_dim = 1;
    Term term;
    QuadraticTerms quadratic;
    /// sup_k ‖h̃_k‖∞ when known.
    std::optional<double> h_inf;

    bool has_closed_form() const { return static_cast<bool>(quadratic); }

    /// h̃_k = x_k.
    static AdditiveFunctional state_sum(Index d);
    /// h̃_k = x_{k+1}.
    static AdditiveFunctional next_state_sum(Index d);
    static AdditiveFunctional zero(Index d, Index out_dim = 1);
    /// h̃_k = x_kᵀ x_{k+1}.
    static AdditiveFunctional cross_product(Index d);
    /// h̃_k = x_k when k == k0, zero otherwise.
    static AdditiveFunctional marginal(Index d, std::size_t k0);
    /// User-supplied term without closed form.
    static AdditiveFunctional custom(Index out_dim, Term term, std::optional<double> h_inf = std::nullopt);
};

/// Evaluates the functional along one state path (x_0..x_n).
Vector eval_additive(const std::vector<Vector>& states, const AdditiveFunctional& f);

}  // namespace bvs
