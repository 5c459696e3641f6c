#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bvs/rng.hpp"
#include "bvs/variational.hpp"

namespace bvs {

/// Variational prior N(abar0, qbar0) and transition N(abar x, qbar).
template <class T>
struct VariationalDynamicsT {
    Vec<T> abar0;
    Mat<T> qbar0;
    Mat<T> abar;
    Mat<T> qbar;

    Index state_dim() const { return abar0.size(); }
};

using VariationalDynamics = VariationalDynamicsT<double>;

/// Sigmoid single-layer perceptron: s(in) = sigmoid(W in + b).
template <class T>
using GateParamsT = LayerT<T>;
using GateParams = GateParamsT<double>;

enum class UpdateMode { Johnson, Gated };

UpdateMode parse_update_mode(std::string_view name);
std::string update_mode_name(UpdateMode mode);

/// Shape of an amortized model; serialized as {layer_dims, gate, mode}.
struct AmortizedArchitecture {
    UpdateMode mode = UpdateMode::Gated;
    Index state_dim = 1;
    Index obs_dim = 1;
    std::vector<Index> hidden{16, 16};
    bool gate = true;

    /// Size of the (mean, log-Cholesky) parameter vector of a d-dim Gaussian.
    Index gaussian_param_dim() const { return state_dim + state_dim * (state_dim + 1) / 2; }
    Index net_input_dim() const;
    Index net_output_dim() const;
    std::vector<Index> layer_dims() const;

    std::string to_json() const;
    static AmortizedArchitecture from_json(const std::string& text);
};

template <class T>
struct AmortizedModelT {
    UpdateMode mode = UpdateMode::Gated;
    VariationalDynamicsT<T> dyn;
    MLPT<T> net;   ///< encoder (Johnson) or update network (gated)
    bool use_gate = true;
    GateParamsT<T> gate;
};

using AmortizedModel = AmortizedModelT<double>;

/// (mean, log-Cholesky factor entries) of a Gaussian.
template <class T>
Vec<T> gaussian_to_params(const GaussianT<T>& g) {
    using std::log;
    const Index d = g.dim();
    const Mat<T> l = cholesky(g.cov);
    Vec<T> out(d + d * (d + 1) / 2);
    out.head(d) = g.mean;
    Index k = d;
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j <= i; ++j) out(k++) = (i == j) ? log(l(i, i)) : l(i, j);
    return out;
}

template <class T>
GaussianT<T> gaussian_from_params(const Vec<T>& p, Index d) {
    std::vector<T> tail(p.data() + d, p.data() + p.size());
    return {p.head(d), constrain_spd<T>(std::span<const T>(tail), d)};
}

/// u_k = (Ā μ, Ā Σ Āᵀ + Q̄).
template <class T>
GaussianT<T> predict_step(const GaussianT<T>& prev, const VariationalDynamicsT<T>& dyn) {
    return {dyn.abar * prev.mean, symmetrize<T>(Mat<T>(dyn.abar * prev.cov * dyn.abar.transpose() + dyn.qbar))};
}

/// Encoder output split into eta1 and eta2 = −softplus(raw) on the diagonal.
template <class T>
NaturalGaussianT<T> encode_eta(const MLPT<T>& net, const Vec<T>& input) {
    const Vec<T> out = mlp_forward(net, input);
    if (out.size() % 2 != 0) throw DimMismatch("encoder output must hold eta1 and the eta2 diagonal");
    const Index d = out.size() / 2;
    NaturalGaussianT<T> eta;
    eta.eta1 = out.head(d);
    eta.eta2 = Mat<T>::Zero(d, d);
    for (Index i = 0; i < d; ++i) {
        eta.eta2(i, i) = -ad::softplus(out(d + i));
        if (value_of(eta.eta2(i, i)) > -1e-12) throw NotPositiveDefinite("encoder precision vanished");
    }
    return eta;
}

template <class T>
GaussianT<T> johnson_update(const GaussianT<T>& u, const NaturalGaussianT<T>& encoded) {
    return from_natural(natural_product(to_natural(u), encoded));
}

/// (u params, y), the input of the gated update network and of the gate.
template <class T>
Vec<T> gated_features(const GaussianT<T>& u, const Vector& y) {
    const Vec<T> up = gaussian_to_params(u);
    Vec<T> in(up.size() + y.size());
    in << up, y.template cast<T>();
    return in;
}

/// s ⊙ u + (1 − s) ⊙ f'(u, y) in (mean, log-Cholesky) space.
template <class T>
GaussianT<T> gated_update(const GaussianT<T>& u, const Vector& y, const MLPT<T>& net, const GateParamsT<T>* gate) {
    const Vec<T> in = gated_features(u, y);
    const Vec<T> up = in.head(in.size() - y.size());
    const Vec<T> f = mlp_forward(net, in);
    if (f.size() != up.size()) throw DimMismatch("update network output must match the Gaussian parameter size");
    if (!gate) return gaussian_from_params(f, u.dim());
    if (gate->weights.rows() != up.size() || gate->weights.cols() != in.size())
        throw DimMismatch("gate shape does not match the update features");
    Vec<T> mixed(up.size());
    for (Index i = 0; i < up.size(); ++i) {
        T z = gate->bias(i);
        for (Index j = 0; j < in.size(); ++j) z += gate->weights(i, j) * in(j);
        const T s = ad::sigmoid(z);
        mixed(i) = s * up(i) + (1.0 - s) * f(i);
    }
    return gaussian_from_params(mixed, u.dim());
}

/// Kernel q_{k-1|k} from conjugating the variational transition with q_{k-1}.
template <class T>
LinearBackwardKernelT<T> backward_from_dynamics(const GaussianT<T>& q_prev, const VariationalDynamicsT<T>& dyn) {
    return backward_kernel(q_prev, dyn.abar, dyn.qbar);
}

template <class T>
GaussianT<T> amortized_update(const AmortizedModelT<T>& model, const GaussianT<T>& u, const Vector& y) {
    if (model.mode == UpdateMode::Johnson) return johnson_update(u, encode_eta(model.net, Vec<T>(y.template cast<T>())));
    return gated_update(u, y, model.net, model.use_gate ? &model.gate : nullptr);
}

/// Runs q_0 = r(u_0, y_0), u_k = predict(q_{k-1}), q_k = r(u_k, y_k) and
/// assembles the backward-factorized family.
template <class T>
BackwardVariationalT<T> amortized_recursion(const AmortizedModelT<T>& model, const std::vector<Vector>& y) {
    if (y.empty()) throw LengthMismatch("no observations");
    BackwardVariationalT<T> q;
    q.marginals.reserve(y.size());
    q.kernels.reserve(y.size() - 1);
    GaussianT<T> u{model.dyn.abar0, model.dyn.qbar0};
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (k > 0) {
            const GaussianT<T>& prev = q.marginals.back();
            u = predict_step(prev, model.dyn);
            q.kernels.push_back(backward_from_dynamics(prev, model.dyn));
        }
        q.marginals.push_back(amortized_update(model, u, y[k]));
    }
    q.terminal = q.marginals.back();
    return q;
}

/// Parameter layout: dyn.abar0, dyn.qbar0, dyn.abar, dyn.qbar, net.W*/net.b*, gate.W/gate.b.
ParamLayout amortized_layout(const AmortizedArchitecture& arch);

ParamVector init_amortized(const AmortizedArchitecture& arch, const VariationalDynamics& dyn, Rng& rng);

template <class T>
AmortizedModelT<T> read_amortized(const AmortizedArchitecture& arch, const ParamLayout& layout,
                                  std::span<const T> values) {
    AmortizedModelT<T> m;
    m.mode = arch.mode;
    m.dyn.abar0 = read_vector<T>(layout, values, "dyn.abar0");
    m.dyn.qbar0 = read_matrix<T>(layout, values, "dyn.qbar0");
    m.dyn.abar = read_matrix<T>(layout, values, "dyn.abar");
    m.dyn.qbar = read_matrix<T>(layout, values, "dyn.qbar");
    m.net = read_mlp<T>(layout, values, "net", arch.hidden.size() + 1, Activation::Tanh, Activation::Identity);
    m.use_gate = arch.mode == UpdateMode::Gated && arch.gate;
    if (m.use_gate) m.gate = {read_matrix<T>(layout, values, "gate.W"), read_vector<T>(layout, values, "gate.b")};
    return m;
}

/// Standard normal draws for the reparameterized emission term, indexed
/// [k][sample] → d-vector. Drawn outside the tape.
using FrozenNoise = std::vector<std::vector<Vector>>;

FrozenNoise draw_frozen_noise(std::size_t steps, std::size_t n_samples, Index d, std::uint64_t seed);

/// Closed-form prior, transition and entropy terms plus a reparameterized
/// Monte Carlo estimate of Σ_k E_{q_k}[log N(y_k; h(X_k), R)] over the
/// smoothing marginals of q.
template <class T>
T mc_elbo_nonlinear(const LGParams& theta_dyn, const NonlinearEmission& emission, const BackwardVariationalT<T>& q,
                    const std::vector<Vector>& y, const FrozenNoise& noise) {
    const std::size_t n = q.horizon();
    if (y.size() != n + 1) throw LengthMismatch("observation count must be horizon + 1");
    if (noise.size() != n + 1 || noise.front().empty()) throw LengthMismatch("noise must cover every time step");
    const Index d = theta_dyn.state_dim();
    const LGParamsT<T> th = cast_params<T>(theta_dyn);
    const MLPT<T> decoder = cast_mlp<T>(emission.decoder);
    const SmoothingT<T> s = variational_smoothing(q);
    const Mat<T> eye = Mat<T>::Identity(d, d);

    T elbo = expected_log_normal<T>(s.marginals[0], eye, Vec<T>(-th.a0), th.q0);
    if (n > 0) {
        Mat<T> f_trans(d, 2 * d);
        f_trans << -th.a, eye;
        const Vec<T> zero = Vec<T>::Zero(d);
        for (std::size_t k = 0; k < n; ++k) elbo += expected_log_normal<T>(s.pairwise[k], f_trans, zero, th.q);
    }
    elbo += gaussian_entropy(q.terminal);
    for (const auto& kern : q.kernels) elbo += kernel_entropy(kern.cov);

    const GaussianT<T> emit_noise{Vec<T>::Zero(emission.obs_dim()), emission.r.template cast<T>()};
    for (std::size_t k = 0; k <= n; ++k) {
        const Mat<T> l = cholesky(s.marginals[k].cov);
        const Vec<T> yk = y[k].template cast<T>();
        T acc = T(0.0);
        for (const Vector& eps : noise[k]) {
            const Vec<T> x = s.marginals[k].mean + l * eps.template cast<T>();
            acc += gaussian_log_density<T>(emit_noise, Vec<T>(yk - emission_mean<T>(decoder, emission.apply_cos, x)));
        }
        elbo += acc / static_cast<double>(noise[k].size());
    }
    if (!std::isfinite(value_of(elbo))) throw NonFiniteValue("Monte Carlo ELBO is not finite");
    return elbo;
}

template <class T>
T mc_elbo_nonlinear(const LGParams& theta_dyn, const NonlinearEmission& emission, const BackwardVariationalT<T>& q,
                    const std::vector<Vector>& y, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw InvalidArgument("n_samples must be at least 1");
    return mc_elbo_nonlinear(theta_dyn, emission, q, y,
                             draw_frozen_noise(y.size(), n_samples, theta_dyn.state_dim(), seed));
}

}  // namespace bvs
