#pragma once

#include <vector>

#include "fire/model.hpp"
#include "fire/rng.hpp"

namespace testutil {

inline fire::Tensor random_tensor(const std::vector<int>& shape, fire::Rng& rng, double lo = 0.0, double hi = 1.0) {
    fire::Tensor t = fire::Tensor::zeros(shape);
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

// dense(4->3) with seeded weights and a tap on the dense output.
inline fire::LayeredModel tiny_dense_model(std::uint64_t seed = 3, int in_dim = 4, int out_dim = 3) {
    fire::LayeredModel m;
    m.input_shape = {in_dim};
    m.num_classes = out_dim;
    m.layers.push_back(fire::dense_layer(in_dim, out_dim));
    m.taps = {0};
    fire::Rng rng(seed);
    for (auto& w : m.layers[0].weight.data) w = static_cast<float>(rng.normal(0.0, 0.5));
    for (auto& b : m.layers[0].bias.data) b = static_cast<float>(rng.normal(0.0, 0.1));
    fire::validate_model(m);
    return m;
}

// dense(6->5)-relu-dense(5->3) two-layer MLP, taps after each dense layer.
inline fire::LayeredModel tiny_mlp(std::uint64_t seed = 11) {
    fire::LayeredModel m;
    m.input_shape = {6};
    m.num_classes = 3;
    m.layers.push_back(fire::dense_layer(6, 5));
    m.layers.push_back(fire::relu_layer());
    m.layers.push_back(fire::dense_layer(5, 3));
    m.taps = {0, 2};
    fire::Rng rng(seed);
    for (auto* t : fire::param_tensors(m))
        for (auto& v : t->data) v = static_cast<float>(rng.normal(0.0, 0.6));
    fire::validate_model(m);
    return m;
}

// conv(2ch 3x3)-relu-pool-flatten-dense stack on 1x6x6 input, taps after
// conv and dense hidden.
inline fire::LayeredModel tiny_conv_model(std::uint64_t seed = 17) {
    fire::LayeredModel m;
    m.input_shape = {1, 6, 6};
    m.num_classes = 3;
    m.layers.push_back(fire::conv2d_layer(1, 2, 3));
    m.layers.push_back(fire::relu_layer());
    m.layers.push_back(fire::maxpool2d_layer(2));
    m.layers.push_back(fire::flatten_layer());
    m.layers.push_back(fire::dense_layer(8, 3));
    m.taps = {0, 4};
    fire::Rng rng(seed);
    for (auto* t : fire::param_tensors(m))
        for (auto& v : t->data) v = static_cast<float>(rng.normal(0.0, 0.4));
    fire::validate_model(m);
    return m;
}

}  // namespace testutil
