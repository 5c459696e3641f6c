#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bvs/autodiff.hpp"
#include "bvs/params.hpp"

namespace bvs {

class Rng;

enum class Activation { Identity, Tanh, Cos, Sigmoid, Softplus };

/// Throws UnsupportedPrimitive for names outside the supported set.
Activation parse_activation(std::string_view name);
std::string activation_name(Activation a);

template <class T>
T activate(Activation a, const T& x) {
    using std::cos;
    using std::tanh;
    switch (a) {
        case Activation::Identity: return x;
        case Activation::Tanh: return tanh(x);
        case Activation::Cos: return cos(x);
        case Activation::Sigmoid: return ad::sigmoid(x);
        case Activation::Softplus: return ad::softplus(x);
    }
    throw UnsupportedPrimitive("activation");
}

template <class T>
struct LayerT {
    Mat<T> weights;  // out × in
    Vec<T> bias;
};

/// Affine layers with `hidden` between them and `output` after the last one.
template <class T>
struct MLPT {
    std::vector<LayerT<T>> layers;
    Activation hidden = Activation::Tanh;
    Activation output = Activation::Identity;

    Index input_dim() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
    Index output_dim() const { return layers.empty() ? 0 : layers.back().weights.rows(); }
};

using MLPParams = MLPT<double>;

template <class T>
Vec<T> mlp_forward(const MLPT<T>& net, const Vec<T>& input) {
    if (net.layers.empty()) throw DimMismatch("empty network");
    if (input.size() != net.input_dim())
        throw DimMismatch("network expects input of size " + std::to_string(net.input_dim()) + ", got " +
                          std::to_string(input.size()));
    Vec<T> h = input;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const LayerT<T>& layer = net.layers[l];
        const bool last = l + 1 == net.layers.size();
        const Activation act = last ? net.output : net.hidden;
        Vec<T> next(layer.weights.rows());
        for (Index i = 0; i < layer.weights.rows(); ++i) {
            T s = layer.bias(i);
            for (Index j = 0; j < layer.weights.cols(); ++j) s += layer.weights(i, j) * h(j);
            next(i) = activate(act, s);
        }
        h = std::move(next);
    }
    return h;
}

template <class T>
MLPT<T> cast_mlp(const MLPParams& net) {
    MLPT<T> out;
    out.hidden = net.hidden;
    out.output = net.output;
    for (const auto& l : net.layers) out.layers.push_back({l.weights.template cast<T>(), l.bias.template cast<T>()});
    return out;
}

/// Uniform on ±√(6/(fan_in+fan_out)); shape fan_out × fan_in.
Matrix xavier_init(Index fan_out, Index fan_in, Rng& rng);
Vector normal_bias_init(Index n, Rng& rng, double stddev = 0.01);

/// dims = {input, hidden..., output}.
MLPParams make_mlp(const std::vector<Index>& dims, Rng& rng, Activation hidden = Activation::Tanh,
                   Activation output = Activation::Identity);

/// Registers "<prefix>.W<l>" / "<prefix>.b<l>" entries for every layer.
void add_mlp_params(ParamLayout& layout, const std::string& prefix, const std::vector<Index>& dims);
void write_mlp(ParamVector& params, const std::string& prefix, const MLPParams& net);

template <class T>
MLPT<T> read_mlp(const ParamLayout& layout, std::span<const T> values, const std::string& prefix,
                 std::size_t n_layers, Activation hidden = Activation::Tanh,
                 Activation output = Activation::Identity) {
    MLPT<T> net;
    net.hidden = hidden;
    net.output = output;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::string s = std::to_string(l);
        net.layers.push_back({read_matrix<T>(layout, values, prefix + ".W" + s),
                              read_vector<T>(layout, values, prefix + ".b" + s)});
    }
    return net;
}

}  // namespace bvs
