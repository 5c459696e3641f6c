#include "bvs/ssm.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "bvs/rng.hpp"

namespace bvs {

void validate(const LGParams& p) {
    const Index d = p.state_dim();
    const Index m = p.obs_dim();
    if (d < 1 || m < 1) throw DimMismatch("empty state or observation dimension");
    if (p.q0.rows() != d || p.q0.cols() != d || p.a.rows() != d || p.a.cols() != d || p.q.rows() != d ||
        p.q.cols() != d || p.b.cols() != d || p.r.rows() != m || p.r.cols() != m)
        throw DimMismatch("inconsistent linear-Gaussian parameter shapes");
    cholesky(p.q0);
    cholesky(p.q);
    cholesky(p.r);
}

LGParams scalar_lg_params(double a0, double q0, double a, double q, double b, double r) {
    LGParams p;
    p.a0 = Vector::Constant(1, a0);
    p.q0 = Matrix::Constant(1, 1, q0);
    p.a = Matrix::Constant(1, 1, a);
    p.q = Matrix::Constant(1, 1, q);
    p.b = Matrix::Constant(1, 1, b);
    p.r = Matrix::Constant(1, 1, r);
    return p;
}

NonlinearEmission make_noninjective_emission(Index d, Index m, const Matrix& r, Rng& rng, bool apply_cos) {
    NonlinearEmission e;
    e.decoder = make_mlp({d, m}, rng, Activation::Tanh, Activation::Tanh);
    e.apply_cos = apply_cos;
    e.r = r;
    return e;
}

namespace {

template <class EmitMean>
Trajectory simulate(const LGParams& dyn, const Matrix& r, EmitMean&& emit, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const Matrix lq0 = cholesky(dyn.q0);
    const Matrix lq = cholesky(dyn.q);
    const Matrix lr = cholesky(r);
    Trajectory t;
    t.states.reserve(n + 1);
    t.observations.reserve(n + 1);
    Vector x = sample_gaussian(dyn.a0, lq0, rng);
    for (std::size_t k = 0; k <= n; ++k) {
        if (k > 0) x = sample_gaussian(Vector(dyn.a * x), lq, rng);
        t.states.push_back(x);
        t.observations.push_back(sample_gaussian(emit(x), lr, rng));
    }
    return t;
}

}  // namespace

Trajectory simulate_lg(const LGParams& params, std::size_t n, std::uint64_t seed) {
    validate(params);
    return simulate(params, params.r, [&](const Vector& x) { return Vector(params.b * x); }, n, seed);
}

Trajectory simulate_nonlinear(const LGParams& dynamics, const NonlinearEmission& emission, std::size_t n,
                              std::uint64_t seed) {
    if (emission.state_dim() != dynamics.state_dim())
        throw DimMismatch("decoder input dimension differs from the state dimension");
    return simulate(dynamics, emission.r, [&](const Vector& x) { return emission_mean(emission, x); }, n, seed);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    if (traj.states.size() != traj.observations.size()) throw LengthMismatch("states and observations differ");
    const Index d = traj.states.empty() ? 0 : traj.states.front().size();
    const Index m = traj.observations.empty() ? 0 : traj.observations.front().size();
    out << "k";
    for (Index i = 0; i < d; ++i) out << ",x_" << i;
    for (Index i = 0; i < m; ++i) out << ",y_" << i;
    out << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << k;
        for (Index i = 0; i < d; ++i) out << ',' << traj.states[k](i);
        for (Index i = 0; i < m; ++i) out << ',' << traj.observations[k](i);
        out << '\n';
    }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_trajectory_csv(out, traj);
}

Trajectory read_trajectory_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty trajectory CSV");
    Index d = 0;
    Index m = 0;
    {
        std::stringstream ss(line);
        std::string col;
        std::getline(ss, col, ',');
        if (col != "k") throw ConfigError("trajectory CSV must start with column 'k'");
        while (std::getline(ss, col, ',')) {
            if (col.rfind("x_", 0) == 0)
                ++d;
            else if (col.rfind("y_", 0) == 0)
                ++m;
            else
                throw ConfigError("unexpected trajectory column '" + col + "'");
        }
    }
    Trajectory t;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        Vector x(d);
        Vector y(m);
        for (Index i = 0; i < d + m; ++i) {
            if (!std::getline(ss, cell, ',')) throw ConfigError("short trajectory row");
            const double v = std::stod(cell);
            if (i < d)
                x(i) = v;
            else
                y(i - d) = v;
        }
        t.states.push_back(std::move(x));
        t.observations.push_back(std::move(y));
    }
    return t;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    return read_trajectory_csv(in);
}

}  // namespace bvs
