#include "bvs/gaussian.hpp"

#include <cmath>

#include "bvs/rng.hpp"

namespace bvs {

void validate(const Gaussian& g) {
    if (g.cov.rows() != g.dim() || g.cov.cols() != g.dim())
        throw DimMismatch("covariance shape does not match mean");
    if (!g.mean.allFinite() || !g.cov.allFinite()) throw NotPositiveDefinite("non-finite Gaussian parameters");
    const double asym = (g.cov - g.cov.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(1.0, g.cov.cwiseAbs().maxCoeff()))
        throw NotPositiveDefinite("covariance is not symmetric");
    cholesky(g.cov);
}

Vector sample_gaussian(const Vector& mean, const Matrix& chol, Rng& rng) {
    Vector z(mean.size());
    for (Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return mean + chol * z;
}

Vector sample_gaussian(const Gaussian& g, Rng& rng) {
    return sample_gaussian(g.mean, cholesky(g.cov), rng);
}

}  // namespace bvs
