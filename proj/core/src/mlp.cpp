#include "bvs/mlp.hpp"

#include <cmath>

#include "bvs/rng.hpp"

namespace bvs {

Activation parse_activation(std::string_view name) {
    if (name == "identity" || name == "linear") return Activation::Identity;
    if (name == "tanh") return Activation::Tanh;
    if (name == "cos") return Activation::Cos;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "softplus") return Activation::Softplus;
    throw UnsupportedPrimitive("no differentiable primitive named '" + std::string(name) + "'");
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Cos: return "cos";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softplus: return "softplus";
    }
    return "identity";
}

Matrix xavier_init(Index fan_out, Index fan_in, Rng& rng) {
    if (fan_in < 1 || fan_out < 1) throw InvalidArgument("xavier_init needs positive fan-in and fan-out");
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (Index i = 0; i < fan_out; ++i)
        for (Index j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-a, a);
    return w;
}

Vector normal_bias_init(Index n, Rng& rng, double stddev) {
    Vector b(n);
    for (Index i = 0; i < n; ++i) b(i) = stddev * rng.normal();
    return b;
}

MLPParams make_mlp(const std::vector<Index>& dims, Rng& rng, Activation hidden, Activation output) {
    if (dims.size() < 2) throw InvalidArgument("an MLP needs at least input and output dimensions");
    MLPParams net;
    net.hidden = hidden;
    net.output = output;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Matrix w = xavier_init(dims[l + 1], dims[l], rng);
        Vector b = normal_bias_init(dims[l + 1], rng);
        net.layers.push_back({std::move(w), std::move(b)});
    }
    return net;
}

void add_mlp_params(ParamLayout& layout, const std::string& prefix, const std::vector<Index>& dims) {
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::string s = std::to_string(l);
        layout.add(prefix + ".W" + s, dims[l + 1], dims[l]);
        layout.add(prefix + ".b" + s, dims[l + 1], 1);
    }
}

void write_mlp(ParamVector& params, const std::string& prefix, const MLPParams& net) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const std::string s = std::to_string(l);
        params.set_matrix(prefix + ".W" + s, net.layers[l].weights);
        params.set_matrix(prefix + ".b" + s, net.layers[l].bias);
    }
}

}  // namespace bvs
