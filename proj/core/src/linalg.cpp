#include "bvs/linalg.hpp"

#include <algorithm>
#include <limits>

namespace bvs {

double min_eigenvalue(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

double relative_frobenius(const Matrix& a, const Matrix& b) {
    const double denom = std::max(b.norm(), std::numeric_limits<double>::min());
    return (a - b).norm() / denom;
}

}  // namespace bvs
