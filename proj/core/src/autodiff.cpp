#include "bvs/autodiff.hpp"

#include <cmath>

#include "bvs/error.hpp"

namespace bvs::ad {

Tape& Tape::active() {
    thread_local Tape tape;
    return tape;
}

std::vector<double> Tape::backward(std::int32_t output) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    if (output < 0) return adj;
    adj[static_cast<std::size_t>(output)] = 1.0;
    for (std::int32_t i = output; i >= 0; --i) {
        const double g = adj[static_cast<std::size_t>(i)];
        if (g == 0.0) continue;
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += g * n.da;
        if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += g * n.db;
    }
    return adj;
}

ValueAndGradient forward_backward(const Program& program, std::span<const double> inputs) {
    Tape& tape = Tape::active();
    tape.reset();
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (double x : inputs) vars.push_back(Var::independent(x));

    const Var out = program(vars);
    ValueAndGradient result;
    result.value = out.value();
    if (!std::isfinite(result.value)) {
        tape.reset();
        throw NonFiniteValue("program value is " + std::to_string(result.value));
    }
    result.gradient.assign(inputs.size(), 0.0);
    if (!out.is_constant()) {
        const std::vector<double> adj = tape.backward(out.node());
        for (std::size_t i = 0; i < vars.size(); ++i) {
            const double g = adj[static_cast<std::size_t>(vars[i].node())];
            if (!std::isfinite(g)) {
                tape.reset();
                throw NonFiniteValue("gradient coordinate " + std::to_string(i) + " is not finite");
            }
            result.gradient[i] = g;
        }
    }
    tape.reset();
    return result;
}

std::vector<double> finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                               std::span<const double> x, double step) {
    std::vector<double> point(x.begin(), x.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = point[i];
        point[i] = orig + step;
        const double up = f(point);
        point[i] = orig - step;
        const double down = f(point);
        point[i] = orig;
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

}  // namespace bvs::ad
