#include "bvs/additive.hpp"

namespace bvs {

namespace {

std::vector<QuadraticForm> linear_pick(Index d, Index offset) {
    std::vector<QuadraticForm> forms;
    for (Index i = 0; i < d; ++i) {
        QuadraticForm q = QuadraticForm::zero(2 * d);
        q.b(offset + i) = 1.0;
        forms.push_back(std::move(q));
    }
    return forms;
}

}  // namespace

AdditiveFunctional AdditiveFunctional::state_sum(Index d) {
    AdditiveFunctional f;
    f.out_dim = d;
    f.term = [](std::size_t, const Vector& x, const Vector&) { return x; };
    f.quadratic = [d](std::size_t) { return linear_pick(d, 0); };
    return f;
}

AdditiveFunctional AdditiveFunctional::next_state_sum(Index d) {
    AdditiveFunctional f;
    f.out_dim = d;
    f.term = [](std::size_t, const Vector&, const Vector& xn) { return xn; };
    f.quadratic = [d](std::size_t) { return linear_pick(d, d); };
    return f;
}

AdditiveFunctional AdditiveFunctional::zero(Index d, Index out_dim) {
    AdditiveFunctional f;
    f.out_dim = out_dim;
    f.term = [out_dim](std::size_t, const Vector&, const Vector&) { return Vector::Zero(out_dim); };
    f.quadratic = [d, out_dim](std::size_t) {
        return std::vector<QuadraticForm>(static_cast<std::size_t>(out_dim), QuadraticForm::zero(2 * d));
    };
    f.h_inf = 0.0;
    return f;
}

AdditiveFunctional AdditiveFunctional::cross_product(Index d) {
    AdditiveFunctional f;
    f.out_dim = 1;
    f.term = [](std::size_t, const Vector& x, const Vector& xn) { return Vector::Constant(1, x.dot(xn)); };
    f.quadratic = [d](std::size_t) {
        QuadraticForm q = QuadraticForm::zero(2 * d);
        for (Index i = 0; i < d; ++i) {
            q.p(i, d + i) = 0.5;
            q.p(d + i, i) = 0.5;
        }
        return std::vector<QuadraticForm>{q};
    };
    return f;
}

AdditiveFunctional AdditiveFunctional::marginal(Index d, std::size_t k0) {
    AdditiveFunctional f;
    f.out_dim = d;
    f.term = [k0, d](std::size_t k, const Vector& x, const Vector&) {
        return k == k0 ? x : Vector(Vector::Zero(d));
    };
    f.quadratic = [k0, d](std::size_t k) {
        return k == k0 ? linear_pick(d, 0)
                       : std::vector<QuadraticForm>(static_cast<std::size_t>(d), QuadraticForm::zero(2 * d));
    };
    return f;
}

AdditiveFunctional AdditiveFunctional::custom(Index out_dim, Term term, std::optional<double> h_inf) {
    AdditiveFunctional f;
    f.out_dim = out_dim;
    f.term = std::move(term);
    f.h_inf = h_inf;
    return f;
}

Vector eval_additive(const std::vector<Vector>& states, const AdditiveFunctional& f) {
    if (states.size() < 2) throw LengthMismatch("an additive functional needs at least two states");
    Vector total = Vector::Zero(f.out_dim);
    for (std::size_t k = 0; k + 1 < states.size(); ++k) {
        const Vector v = f.term(k, states[k], states[k + 1]);
        if (v.size() != f.out_dim) throw DimMismatch("functional term has the wrong output dimension");
        total += v;
    }
    return total;
}

}  // namespace bvs
