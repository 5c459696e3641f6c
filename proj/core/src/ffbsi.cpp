#include "bvs/ffbsi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

#include "bvs/rng.hpp"

namespace bvs {

namespace {

constexpr double kUnderflowLogWeight = -700.0;

/// Normalizes in place; returns the log-sum-exp of the input.
double normalize_log_weights(Vector& lw) {
    const double mx = lw.maxCoeff();
    if (!std::isfinite(mx) || mx < kUnderflowLogWeight)
        throw WeightCollapse("all particle weights vanished (max log-weight " + std::to_string(mx) + ")");
    const double lse = mx + std::log((lw.array() - mx).exp().sum());
    if (!std::isfinite(lse)) throw WeightCollapse("log-sum-exp of particle weights is not finite");
    lw.array() -= lse;
    return lse;
}

std::vector<Index> systematic_resample(const Vector& log_weights, Index n_out, Rng& rng) {
    std::vector<Index> idx(static_cast<std::size_t>(n_out));
    const double step = 1.0 / static_cast<double>(n_out);
    double u = rng.uniform() * step;
    double cum = std::exp(log_weights(0));
    Index j = 0;
    const Index n = log_weights.size();
    for (Index i = 0; i < n_out; ++i) {
        while (u > cum && j + 1 < n) cum += std::exp(log_weights(++j));
        idx[static_cast<std::size_t>(i)] = j;
        u += step;
    }
    return idx;
}

}  // namespace

ParticleModel ParticleModel::linear(const LGParams& params) {
    validate(params);
    ParticleModel m;
    m.dynamics = params;
    const Gaussian noise{Vector::Zero(params.obs_dim()), params.r};
    const Matrix b = params.b;
    m.emission_logpdf = [noise, b](const Vector& x, const Vector& y) {
        return gaussian_log_density<double>(noise, Vector(y - b * x));
    };
    return m;
}

ParticleModel ParticleModel::nonlinear(const LGParams& dynamics, const NonlinearEmission& emission) {
    if (emission.state_dim() != dynamics.state_dim()) throw DimMismatch("decoder input dimension");
    ParticleModel m;
    m.dynamics = dynamics;
    const Gaussian noise{Vector::Zero(emission.obs_dim()), emission.r};
    m.emission_logpdf = [noise, emission](const Vector& x, const Vector& y) {
        return gaussian_log_density<double>(noise, Vector(y - emission_mean(emission, x)));
    };
    return m;
}

Vector ParticleSet::mean() const { return positions.transpose() * log_weights.array().exp().matrix(); }

ParticleFilterResult bootstrap_filter(const ParticleModel& model, const std::vector<Vector>& y, Index n_particles,
                                      std::uint64_t seed) {
    if (n_particles < 1) throw InvalidArgument("need at least one particle");
    if (y.empty()) throw LengthMismatch("no observations");
    const LGParams& dyn = model.dynamics;
    const Index d = dyn.state_dim();
    const Matrix lq0 = cholesky(dyn.q0);
    const Matrix lq = cholesky(dyn.q);
    Rng rng(seed);
    ParticleFilterResult out;
    out.sets.reserve(y.size());
    const double log_n = std::log(static_cast<double>(n_particles));
    for (std::size_t k = 0; k < y.size(); ++k) {
        ParticleSet set;
        set.positions.resize(n_particles, d);
        set.log_weights.resize(n_particles);
        if (k == 0) {
            for (Index i = 0; i < n_particles; ++i)
                set.positions.row(i) = sample_gaussian(dyn.a0, lq0, rng).transpose();
        } else {
            const ParticleSet& prev = out.sets.back();
            const std::vector<Index> anc = systematic_resample(prev.log_weights, n_particles, rng);
            for (Index i = 0; i < n_particles; ++i) {
                const Vector mean = dyn.a * prev.positions.row(anc[static_cast<std::size_t>(i)]).transpose();
                set.positions.row(i) = sample_gaussian(mean, lq, rng).transpose();
            }
        }
        for (Index i = 0; i < n_particles; ++i)
            set.log_weights(i) = model.emission_logpdf(set.positions.row(i).transpose(), y[k]);
        out.loglik += normalize_log_weights(set.log_weights) - log_n;
        out.sets.push_back(std::move(set));
    }
    return out;
}

SmoothingSample ffbsi(const ParticleModel& model, const ParticleFilterResult& filter, std::size_t n_trajectories,
                      std::uint64_t seed) {
    if (n_trajectories < 1) throw InvalidArgument("need at least one trajectory");
    if (filter.sets.empty()) throw LengthMismatch("empty particle filter output");
    const std::size_t n = filter.sets.size() - 1;
    const Index d = filter.sets.front().positions.cols();
    const Index big_n = filter.sets.front().size();
    const LGParams& dyn = model.dynamics;
    const Matrix lq = cholesky(dyn.q);
    Rng rng(seed);

    std::vector<std::vector<Index>> chosen(n + 1, std::vector<Index>(n_trajectories));
    {
        const Vector& lw = filter.sets[n].log_weights;
        std::vector<double> cdf(static_cast<std::size_t>(big_n));
        double acc = 0.0;
        for (Index j = 0; j < big_n; ++j) cdf[static_cast<std::size_t>(j)] = acc += std::exp(lw(j));
        for (auto& c : chosen[n]) {
            const double u = rng.uniform() * acc;
            c = std::min<Index>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), big_n - 1);
        }
    }

    std::vector<double> logw(static_cast<std::size_t>(big_n));
    std::vector<double> cdf(static_cast<std::size_t>(big_n));
    for (std::size_t k = n; k > 0; --k) {
        const ParticleSet& cur = filter.sets[k - 1];
        const ParticleSet& next = filter.sets[k];
        if (cur.size() != big_n || next.size() != big_n) throw DimMismatch("particle count changes over time");
        // Predicted means A x_k^j for every particle.
        const Matrix pred = cur.positions * dyn.a.transpose();
        // Trajectories sharing a particle at k share the backward weights.
        std::vector<std::size_t> order(n_trajectories);
        for (std::size_t m = 0; m < n_trajectories; ++m) order[m] = m;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return chosen[k][a] < chosen[k][b]; });
        std::size_t pos = 0;
        while (pos < n_trajectories) {
            const Index target = chosen[k][order[pos]];
            const Vector x_next = next.positions.row(target).transpose();
            double mx = -std::numeric_limits<double>::infinity();
            if (d == 1) {
                const double inv = 1.0 / (lq(0, 0) * lq(0, 0));
                const double xn = x_next(0);
                for (Index j = 0; j < big_n; ++j) {
                    const double r = xn - pred(j, 0);
                    const double v = cur.log_weights(j) - 0.5 * r * r * inv;
                    logw[static_cast<std::size_t>(j)] = v;
                    mx = std::max(mx, v);
                }
            } else {
                for (Index j = 0; j < big_n; ++j) {
                    const Matrix r = x_next - pred.row(j).transpose();
                    const double v = cur.log_weights(j) - 0.5 * solve_lower(lq, r).squaredNorm();
                    logw[static_cast<std::size_t>(j)] = v;
                    mx = std::max(mx, v);
                }
            }
            if (!std::isfinite(mx) || mx < kUnderflowLogWeight)
                throw WeightCollapse("backward weights vanished at step " + std::to_string(k - 1));
            double acc = 0.0;
            for (Index j = 0; j < big_n; ++j)
                cdf[static_cast<std::size_t>(j)] = acc += std::exp(logw[static_cast<std::size_t>(j)] - mx);
            for (; pos < n_trajectories && chosen[k][order[pos]] == target; ++pos) {
                const double u = rng.uniform() * acc;
                chosen[k - 1][order[pos]] =
                    std::min<Index>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), big_n - 1);
            }
        }
    }

    SmoothingSample sample;
    sample.trajectories.assign(n_trajectories, Matrix(static_cast<Index>(n + 1), d));
    for (std::size_t m = 0; m < n_trajectories; ++m)
        for (std::size_t k = 0; k <= n; ++k)
            sample.trajectories[m].row(static_cast<Index>(k)) = filter.sets[k].positions.row(chosen[k][m]);
    return sample;
}

std::vector<Vector> SmoothingSample::states(std::size_t m) const {
    const Matrix& t = trajectories.at(m);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(t.rows()));
    for (Index k = 0; k < t.rows(); ++k) out.push_back(t.row(k).transpose());
    return out;
}

std::vector<Vector> SmoothingSample::marginal_means() const {
    if (trajectories.empty()) return {};
    Matrix acc = Matrix::Zero(trajectories.front().rows(), trajectories.front().cols());
    for (const auto& t : trajectories) acc += t;
    acc /= static_cast<double>(trajectories.size());
    std::vector<Vector> out;
    for (Index k = 0; k < acc.rows(); ++k) out.push_back(acc.row(k).transpose());
    return out;
}

AdditiveEstimate ffbsi_additive(const SmoothingSample& sample, const AdditiveFunctional& f) {
    const std::size_t m = sample.size();
    if (m == 0) throw InvalidArgument("empty smoothing sample");
    std::vector<Vector> values;
    values.reserve(m);
    for (std::size_t i = 0; i < m; ++i) values.push_back(eval_additive(sample.states(i), f));
    AdditiveEstimate est;
    est.mean = Vector::Zero(f.out_dim);
    for (const auto& v : values) est.mean += v;
    est.mean /= static_cast<double>(m);
    est.std_error = Vector::Zero(f.out_dim);
    if (m > 1) {
        for (const auto& v : values) est.std_error.array() += (v - est.mean).array().square();
        est.std_error = (est.std_error / static_cast<double>(m - 1) / static_cast<double>(m)).array().sqrt().matrix();
    }
    return est;
}

void write_smoothing_sample_csv(std::ostream& out, const SmoothingSample& sample) {
    const Index d = sample.trajectories.empty() ? 0 : sample.trajectories.front().cols();
    out << "trajectory_id,k";
    for (Index i = 0; i < d; ++i) out << ",x_" << i;
    out << '\n' << std::setprecision(17);
    for (std::size_t m = 0; m < sample.size(); ++m) {
        const Matrix& t = sample.trajectories[m];
        for (Index k = 0; k < t.rows(); ++k) {
            out << m << ',' << k;
            for (Index i = 0; i < d; ++i) out << ',' << t(k, i);
            out << '\n';
        }
    }
}

void write_smoothing_sample_csv(const std::filesystem::path& path, const SmoothingSample& sample) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_smoothing_sample_csv(out, sample);
}

}  // namespace bvs
