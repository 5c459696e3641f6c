#include "bvs/kalman.hpp"

namespace bvs {

ExactSmoother exact_smoother(const LGParams& params, const std::vector<Vector>& y) {
    ExactSmoother out;
    out.filter = kalman_filter(params, y);
    out.kernels = backward_kernels(params, out.filter);
    out.smoothing = smoother_pass(out.filter.filters.back(), out.kernels);
    return out;
}

Vector smoothed_additive(const Smoothing& smoothing, const AdditiveFunctional& f) {
    if (!f.has_closed_form()) throw UnsupportedFunctionalForm("functional has no linear/quadratic closed form");
    Vector total = Vector::Zero(f.out_dim);
    for (std::size_t k = 0; k < smoothing.pairwise.size(); ++k) {
        const std::vector<QuadraticForm> terms = f.quadratic(k);
        if (static_cast<Index>(terms.size()) != f.out_dim) throw DimMismatch("quadratic term count");
        for (Index i = 0; i < f.out_dim; ++i) total(i) += terms[static_cast<std::size_t>(i)].expectation(smoothing.pairwise[k]);
    }
    return total;
}

}  // namespace bvs
