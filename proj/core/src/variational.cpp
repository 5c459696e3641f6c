#include "bvs/variational.hpp"

#include <cmath>

namespace bvs {

Vector variational_smoothed_additive(const BackwardVariational& q, const AdditiveFunctional& f) {
    return smoothed_additive(variational_smoothing(q), f);
}

namespace {

double mixing_rate(double sigma_minus, double sigma_plus) {
    if (!(sigma_minus > 0.0) || !std::isfinite(sigma_plus) || sigma_minus > sigma_plus)
        throw InvalidMixingConstants("need 0 < sigma_minus <= sigma_plus < inf, got " + std::to_string(sigma_minus) +
                                     ", " + std::to_string(sigma_plus));
    return 1.0 - sigma_minus / sigma_plus;
}

}  // namespace

double prop1_rhs(const std::vector<double>& ck, double sigma_minus, double sigma_plus,
                 const std::vector<double>& h_inf_per_step) {
    const double rho = mixing_rate(sigma_minus, sigma_plus);
    if (ck.empty()) throw LengthMismatch("empty c_k profile");
    const std::size_t n = ck.size() - 1;
    if (h_inf_per_step.size() != n) throw LengthMismatch("need one sup-norm per additive term (n of them)");
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double inner = ck[0] + ck[k + 1];
        for (std::size_t m = 1; m <= k; ++m) inner += std::pow(rho, static_cast<double>(k - m + 1)) * ck[m];
        for (std::size_t m = k + 2; m <= n; ++m) inner += std::pow(rho, static_cast<double>(m - k - 1)) * ck[m];
        total += h_inf_per_step[k] * inner;
    }
    return 2.0 * (sigma_plus / sigma_minus) * total;
}

double linear_growth_bound(double c_plus, double h_inf, double sigma_minus, double sigma_plus, std::size_t n) {
    const double rho = mixing_rate(sigma_minus, sigma_plus);
    return 4.0 * (sigma_plus / sigma_minus) * (1.0 + rho / (1.0 - rho)) * c_plus * h_inf * static_cast<double>(n);
}

}  // namespace bvs
