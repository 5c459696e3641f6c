#pragma once

// Minimal reverse-mode automatic differentiation.
//
// A Var is a (value, node) pair. Constants carry node == -1 and never touch
// the tape, so double-valued code paths instantiated on Var only record what
// depends on independent variables. Each thread owns one Tape; nodes are
// appended in evaluation order, so parents always precede children.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace bvs::ad {

class Tape {
public:
    struct Node {
        std::int32_t a;
        std::int32_t b;
        double da;
        double db;
    };

    /// The calling thread's tape.
    static Tape& active();

    std::int32_t leaf() { return push({-1, -1, 0.0, 0.0}); }
    std::int32_t unary(std::int32_t a, double da) { return push({a, -1, da, 0.0}); }
    std::int32_t binary(std::int32_t a, double da, std::int32_t b, double db) {
        return push({a, b, da, db});
    }

    void reset() { nodes_.clear(); }
    std::size_t size() const { return nodes_.size(); }

    /// Adjoint of every node with respect to `output`.
    std::vector<double> backward(std::int32_t output) const;

private:
    std::int32_t push(const Node& n) {
        nodes_.push_back(n);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
};

class Var {
public:
    Var() = default;
    Var(double v) : value_(v) {}  // NOLINT: constants convert implicitly
    Var(double v, std::int32_t node) : value_(v), node_(node) {}

    static Var independent(double v) { return Var(v, Tape::active().leaf()); }

    double value() const { return value_; }
    std::int32_t node() const { return node_; }
    bool is_constant() const { return node_ < 0; }

    Var& operator+=(const Var& o);
    Var& operator-=(const Var& o);
    Var& operator*=(const Var& o);
    Var& operator/=(const Var& o);

private:
    double value_ = 0.0;
    std::int32_t node_ = -1;
};

inline double value_of(const Var& x) { return x.value(); }

namespace detail {
inline Var unary(double value, const Var& a, double da) {
    if (a.is_constant()) return Var(value);
    return Var(value, Tape::active().unary(a.node(), da));
}
inline Var binary(double value, const Var& a, double da, const Var& b, double db) {
    if (a.is_constant()) return unary(value, b, db);
    if (b.is_constant()) return unary(value, a, da);
    return Var(value, Tape::active().binary(a.node(), da, b.node(), db));
}
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
    return detail::binary(a.value() + b.value(), a, 1.0, b, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
    return detail::binary(a.value() - b.value(), a, 1.0, b, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
    return detail::binary(a.value() * b.value(), a, b.value(), b, a.value());
}
inline Var operator/(const Var& a, const Var& b) {
    const double inv = 1.0 / b.value();
    const double q = a.value() * inv;
    return detail::binary(q, a, inv, b, -q * inv);
}
inline Var operator-(const Var& a) { return detail::unary(-a.value(), a, -1.0); }
inline Var operator+(const Var& a) { return a; }

inline Var operator+(const Var& a, double b) { return detail::unary(a.value() + b, a, 1.0); }
inline Var operator+(double a, const Var& b) { return detail::unary(a + b.value(), b, 1.0); }
inline Var operator-(const Var& a, double b) { return detail::unary(a.value() - b, a, 1.0); }
inline Var operator-(double a, const Var& b) { return detail::unary(a - b.value(), b, -1.0); }
inline Var operator*(const Var& a, double b) { return detail::unary(a.value() * b, a, b); }
inline Var operator*(double a, const Var& b) { return detail::unary(a * b.value(), b, a); }
inline Var operator/(const Var& a, double b) { return detail::unary(a.value() / b, a, 1.0 / b); }
inline Var operator/(double a, const Var& b) {
    const double q = a / b.value();
    return detail::unary(q, b, -q / b.value());
}

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

#define BVS_AD_COMPARE(op)                                                              \
    inline bool operator op(const Var& a, const Var& b) { return a.value() op b.value(); } \
    inline bool operator op(const Var& a, double b) { return a.value() op b; }            \
    inline bool operator op(double a, const Var& b) { return a op b.value(); }
BVS_AD_COMPARE(<)
BVS_AD_COMPARE(>)
BVS_AD_COMPARE(<=)
BVS_AD_COMPARE(>=)
BVS_AD_COMPARE(==)
BVS_AD_COMPARE(!=)
#undef BVS_AD_COMPARE

inline Var exp(const Var& x) {
    const double e = std::exp(x.value());
    return detail::unary(e, x, e);
}
inline Var log(const Var& x) { return detail::unary(std::log(x.value()), x, 1.0 / x.value()); }
inline Var log1p(const Var& x) {
    return detail::unary(std::log1p(x.value()), x, 1.0 / (1.0 + x.value()));
}
inline Var sqrt(const Var& x) {
    const double s = std::sqrt(x.value());
    return detail::unary(s, x, 0.5 / s);
}
inline Var tanh(const Var& x) {
    const double t = std::tanh(x.value());
    return detail::unary(t, x, 1.0 - t * t);
}
inline Var cos(const Var& x) { return detail::unary(std::cos(x.value()), x, -std::sin(x.value())); }
inline Var sin(const Var& x) { return detail::unary(std::sin(x.value()), x, std::cos(x.value())); }
inline Var abs(const Var& x) {
    return detail::unary(std::abs(x.value()), x, x.value() >= 0.0 ? 1.0 : -1.0);
}
inline Var square(const Var& x) { return detail::unary(x.value() * x.value(), x, 2.0 * x.value()); }
inline Var pow(const Var& x, double p) {
    return detail::unary(std::pow(x.value(), p), x, p * std::pow(x.value(), p - 1.0));
}

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
/// log(1 + eˣ), overflow-safe.
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double square(double x) { return x * x; }

inline Var sigmoid(const Var& x) {
    const double s = sigmoid(x.value());
    return detail::unary(s, x, s * (1.0 - s));
}
inline Var softplus(const Var& x) {
    return detail::unary(softplus(x.value()), x, sigmoid(x.value()));
}

// Eigen looks these up for custom scalars.
inline const Var& conj(const Var& x) { return x; }
inline const Var& real(const Var& x) { return x; }
inline Var imag(const Var&) { return Var(0.0); }
inline Var abs2(const Var& x) { return square(x); }

struct ValueAndGradient {
    double value = 0.0;
    std::vector<double> gradient;
};

using Program = std::function<Var(std::span<const Var>)>;

/// Evaluates `program` at `inputs` on a fresh tape and returns the value
/// with its gradient. Throws NonFiniteValue on a NaN/inf value or gradient.
ValueAndGradient forward_backward(const Program& program, std::span<const double> inputs);

/// Central finite-difference gradient of a double-valued function.
std::vector<double> finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                               std::span<const double> x, double step = 1e-5);

}  // namespace bvs::ad

namespace bvs {
using ad::value_of;
}

namespace Eigen {

template <>
struct NumTraits<bvs::ad::Var> : GenericNumTraits<bvs::ad::Var> {
    using Real = bvs::ad::Var;
    using NonInteger = bvs::ad::Var;
    using Nested = bvs::ad::Var;
    using Literal = bvs::ad::Var;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 1,
        AddCost = 2,
        MulCost = 2
    };
    static inline Real epsilon() { return Real(std::numeric_limits<double>::epsilon()); }
    static inline Real dummy_precision() { return Real(1e-12); }
    static inline Real highest() { return Real(std::numeric_limits<double>::max()); }
    static inline Real lowest() { return Real(std::numeric_limits<double>::lowest()); }
    static inline int digits10() { return std::numeric_limits<double>::digits10; }
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<bvs::ad::Var, double, BinaryOp> {
    using ReturnType = bvs::ad::Var;
};
template <typename BinaryOp>
struct ScalarBinaryOpTraits<double, bvs::ad::Var, BinaryOp> {
    using ReturnType = bvs::ad::Var;
};

}  // namespace Eigen
