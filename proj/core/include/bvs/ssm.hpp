#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "bvs/gaussian.hpp"
#include "bvs/mlp.hpp"

namespace bvs {

/// Linear-Gaussian model: x0 ~ N(a0, q0), x_{k+1} ~ N(a x_k, q), y_k ~ N(b x_k, r).
/// Serves both as the data model and as a variational parameter set.
template <class T>
struct LGParamsT {
    Vec<T> a0;
    Mat<T> q0;
    Mat<T> a;
    Mat<T> q;
    Mat<T> b;
    Mat<T> r;

    Index state_dim() const { return a0.size(); }
    Index obs_dim() const { return b.rows(); }

    GaussianT<T> prior() const { return {a0, q0}; }
};

using LGParams = LGParamsT<double>;

template <class T>
LGParamsT<T> cast_params(const LGParams& p) {
    return {p.a0.template cast<T>(), p.q0.template cast<T>(), p.a.template cast<T>(),
            p.q.template cast<T>(),  p.b.template cast<T>(),  p.r.template cast<T>()};
}

template <class T>
LGParams values_of(const LGParamsT<T>& p) {
    return {values_of(p.a0), values_of(p.q0), values_of(p.a), values_of(p.q), values_of(p.b), values_of(p.r)};
}

/// Throws DimMismatch on inconsistent shapes, NotPositiveDefinite on bad covariances.
void validate(const LGParams& p);

/// Scalar model (d = m = 1).
LGParams scalar_lg_params(double a0, double q0, double a, double q, double b, double r);

/// Emission y_k ~ N(h(x_k), r) with h = cos ∘ decoder when apply_cos is set.
struct NonlinearEmission {
    MLPParams decoder;
    bool apply_cos = true;
    Matrix r;

    Index state_dim() const { return decoder.input_dim(); }
    Index obs_dim() const { return decoder.output_dim(); }
};

template <class T>
Vec<T> emission_mean(const MLPT<T>& decoder, bool apply_cos, const Vec<T>& x) {
    using std::cos;
    Vec<T> h = mlp_forward(decoder, x);
    if (apply_cos)
        for (Index i = 0; i < h.size(); ++i) h(i) = cos(h(i));
    return h;
}

inline Vector emission_mean(const NonlinearEmission& e, const Vector& x) {
    return emission_mean<double>(e.decoder, e.apply_cos, x);
}

/// Single tanh layer d → m, Xavier weights, N(0, 0.01²) biases.
NonlinearEmission make_noninjective_emission(Index d, Index m, const Matrix& r, Rng& rng, bool apply_cos = true);

struct Trajectory {
    std::vector<Vector> states;        ///< x_0..x_n
    std::vector<Vector> observations;  ///< y_0..y_n

    std::size_t size() const { return states.size(); }
};

Trajectory simulate_lg(const LGParams& params, std::size_t n, std::uint64_t seed);
Trajectory simulate_nonlinear(const LGParams& dynamics, const NonlinearEmission& emission, std::size_t n,
                              std::uint64_t seed);

/// CSV with header k,x_0..x_{d-1},y_0..y_{m-1}; 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace bvs
