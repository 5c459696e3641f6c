#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "bvs/additive.hpp"
#include "bvs/ssm.hpp"

namespace bvs {

/// Linear-Gaussian prior and transition with an arbitrary emission log-density.
struct ParticleModel {
    using EmissionLogpdf = std::function<double(const Vector& x, const Vector& y)>;

    LGParams dynamics;  ///< a0, q0, a, q are used
    EmissionLogpdf emission_logpdf;

    static ParticleModel linear(const LGParams& params);
    static ParticleModel nonlinear(const LGParams& dynamics, const NonlinearEmission& emission);
};

/// Weighted particle approximation of one filtering distribution.
struct ParticleSet {
    Matrix positions;    ///< N × d
    Vector log_weights;  ///< normalized: log-sum-exp is 0

    Index size() const { return positions.rows(); }
    Vector mean() const;
};

struct ParticleFilterResult {
    std::vector<ParticleSet> sets;  ///< k = 0..n
    double loglik = 0.0;            ///< log of the unbiased likelihood estimate
};

/// Bootstrap filter with systematic resampling at every step.
/// Throws WeightCollapse when every emission likelihood underflows.
ParticleFilterResult bootstrap_filter(const ParticleModel& model, const std::vector<Vector>& y, Index n_particles,
                                      std::uint64_t seed);

struct SmoothingSample {
    std::vector<Matrix> trajectories;  ///< M entries, each (n+1) × d

    std::size_t size() const { return trajectories.size(); }
    std::vector<Vector> states(std::size_t m) const;
    /// Sample mean of x_k across trajectories, k = 0..n.
    std::vector<Vector> marginal_means() const;
};

/// Backward simulation with exact categorical draws over all particles.
SmoothingSample ffbsi(const ParticleModel& model, const ParticleFilterResult& filter, std::size_t n_trajectories,
                      std::uint64_t seed);

struct AdditiveEstimate {
    Vector mean;
    Vector std_error;
};

AdditiveEstimate ffbsi_additive(const SmoothingSample& sample, const AdditiveFunctional& f);

/// Columns trajectory_id,k,x_0..x_{d-1}.
void write_smoothing_sample_csv(std::ostream& out, const SmoothingSample& sample);
void write_smoothing_sample_csv(const std::filesystem::path& path, const SmoothingSample& sample);

}  // namespace bvs
