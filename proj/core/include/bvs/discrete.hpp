#pragma once

#include <cstddef>
#include <vector>

#include "bvs/additive.hpp"

namespace bvs {

class Rng;

/// Finite-state HMM conditioned on a fixed observation sequence.
struct DiscreteHMM {
    Vector init;                       ///< S
    Matrix trans;                      ///< S × S, row = x_k, column = x_{k+1}
    std::vector<Vector> emis_loglik;   ///< log g_k(x, y_k), k = 0..n

    Index states() const { return init.size(); }
    std::size_t horizon() const { return emis_loglik.size() - 1; }

    /// Rows sum to 1 ± 1e-12, strictly positive transitions, consistent sizes.
    void validate() const;

    /// emission is S × V row-stochastic; y holds symbol indices.
    static DiscreteHMM from_observations(const Vector& init, const Matrix& trans, const Matrix& emission,
                                         const std::vector<Index>& y);
};

struct DiscreteSmoothing {
    std::vector<Vector> filters;    ///< k = 0..n
    std::vector<Matrix> kernels;    ///< entry k-1: row x_k, column x_{k-1}
    std::vector<Vector> marginals;  ///< k = 0..n
    std::vector<Matrix> pairwise;   ///< entry k: row x_k, column x_{k+1}
    double loglik = 0.0;
};

DiscreteSmoothing dhmm_filter_smooth(const DiscreteHMM& model);

/// terminal(x_n) Π_k kernels[k-1](x_k, x_{k-1}).
struct DiscreteBackwardVariational {
    Vector terminal;
    std::vector<Matrix> kernels;  ///< row = x_k, column = x_{k-1}

    std::size_t horizon() const { return kernels.size(); }
    void validate() const;
};

DiscreteBackwardVariational exact_backward_variational(const DiscreteSmoothing& smoothing);

/// Pairwise tables (row x_k, column x_{k+1}) and marginals of a backward family.
void backward_marginals(const DiscreteBackwardVariational& q, std::vector<Vector>& marginals,
                        std::vector<Matrix>& pairwise);

/// Identity state labels 0..S-1, used as the state value passed to functionals.
std::vector<Vector> default_state_values(Index states);

/// h̃_k(v_i, v_j) for all state pairs; functional must be scalar.
Matrix additive_term_table(const AdditiveFunctional& f, std::size_t k, const std::vector<Vector>& values);

/// Σ_k Σ_{ij} P_k(i, j) h̃_k(v_i, v_j).
double discrete_additive(const std::vector<Matrix>& pairwise, const AdditiveFunctional& f,
                         const std::vector<Vector>& values);

struct DiscreteCkProfile {
    std::vector<double> values;     ///< c_0..c_n
    std::vector<Vector> rho_hats;
};

/// Exact c_k = Σ|J1 − J2| between ρ̂_k ⊗ q_{k-1|k} and the normalized ρ̂_{k-1} ⊙ ℓ_{k-1};
/// c_0 = Σ|ρ̂_0 − φ_0|. Empty rho_hats selects the true filters with ρ̂_n = q terminal.
DiscreteCkProfile dhmm_ck(const DiscreteHMM& model, const DiscreteBackwardVariational& q,
                          std::vector<Vector> rho_hats = {});

struct MixingConstants {
    double sigma_minus = 0.0;
    double sigma_plus = 0.0;

    double rho() const { return 1.0 - sigma_minus / sigma_plus; }
};

/// Joint min/max over trans(x, x')·g_{k+1}(x') for k < n and all variational kernel entries.
MixingConstants dhmm_sigma(const DiscreteHMM& model, const DiscreteBackwardVariational& q);

struct Prop1Check {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    MixingConstants sigma;
    DiscreteCkProfile ck;
    std::vector<double> h_inf;
};

/// Tolerance on lhs ≤ rhs for floating-point slack.
inline constexpr double kBoundSlack = 1e-10;

Prop1Check dhmm_prop1_check(const DiscreteHMM& model, const DiscreteBackwardVariational& q,
                            const std::vector<Vector>& rho_hats, const AdditiveFunctional& f,
                            const std::vector<Vector>& values);

/// Each kernel row and the terminal replaced by a Dirichlet(κ·row) draw;
/// κ = +∞ returns the input. Entries are floored at 1e-12 before renormalizing.
DiscreteBackwardVariational dirichlet_perturb(const DiscreteBackwardVariational& exact, double kappa, Rng& rng);

/// Kernels mixed toward a point mass: (1 − ε)·K + ε·δ_state on every row.
DiscreteBackwardVariational mix_toward_state(const DiscreteBackwardVariational& exact, double epsilon, Index state);

struct DiscreteInstance {
    Vector init;
    Matrix trans;
    Matrix emission;
    std::vector<Index> states;
    std::vector<Index> observations;

    DiscreteHMM model(std::size_t prefix) const;  ///< conditioned on y_{0:prefix}
};

/// Random model (Dirichlet(1) rows, floored) and a simulated path of length n + 1.
DiscreteInstance random_discrete_instance(Index states, Index symbols, std::size_t n, Rng& rng);

}  // namespace bvs
