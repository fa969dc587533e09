#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fire/tensor.hpp"

namespace fire {

enum class LayerKind { Dense, Conv2d, Relu, MaxPool2d, Flatten };

std::string layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;

    // dense
    int in_dim = 0;
    int out_dim = 0;

    // conv2d
    int in_channels = 0;
    int out_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int stride = 1;
    int pad = 0;

    // maxpool2d
    int pool = 0;
    int pool_stride = 0;

    Tensor weight;  // dense: {out,in}; conv: {oc,ic,kh,kw}
    Tensor bias;    // dense: {out};    conv: {oc}

    bool has_params() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
};

LayerSpec dense_layer(int in_dim, int out_dim);
LayerSpec conv2d_layer(int in_channels, int out_channels, int kernel, int stride = 1, int pad = 0);
LayerSpec relu_layer();
LayerSpec maxpool2d_layer(int pool, int stride = 0);  // stride 0 -> pool
LayerSpec flatten_layer();

// The layered classifier. Tap indices designate layers whose outputs are the
// latent spaces exposed to direction estimation and repair; a tap value of k
// exposes the output of layers[k] in its native shape.
struct LayeredModel {
    std::vector<LayerSpec> layers;
    std::vector<int> taps;
    std::vector<int> input_shape;
    int num_classes = 0;

    int depth() const { return static_cast<int>(layers.size()); }
    bool has_tap(int tap) const;
};

struct PredictionOutcome {
    Tensor logits;
    int label = 0;  // argmax, lowest index on ties
};

// Shape of the output of `spec` applied to `in_shape`; throws ShapeError on a
// type mismatch.
std::vector<int> layer_output_shape(const LayerSpec& spec, const std::vector<int>& in_shape);

// Walks shapes through the whole stack and checks tap ordering; throws on any
// inconsistency.
void validate_model(const LayeredModel& model);

// Shape of the latent at a tap.
std::vector<int> latent_shape(const LayeredModel& model, int tap);

Tensor apply_layer(const LayerSpec& spec, const Tensor& in);
Tensor maxpool2d_with_argmax(const LayerSpec& spec, const Tensor& in, std::vector<int>& argmax_idx);

PredictionOutcome forward(const LayeredModel& model, const Tensor& x);
Tensor forward_to(const LayeredModel& model, const Tensor& x, int tap);
PredictionOutcome forward_from(const LayeredModel& model, const Tensor& latent, int tap);

// One pass collecting the latents at every requested tap (ascending order).
struct ForwardTrace {
    Tensor logits;
    int label = 0;
    std::vector<Tensor> latents;  // parallel to the requested tap list
};
ForwardTrace forward_with_taps(const LayeredModel& model, const Tensor& x, const std::vector<int>& taps);

// Pointers to every parameter tensor in layer order (weights then bias per
// layer). Ordering defines the checkpoint payload layout.
std::vector<Tensor*> param_tensors(LayeredModel& model);
std::vector<const Tensor*> param_tensors(const LayeredModel& model);
std::size_t param_count(const LayeredModel& model);
std::uint64_t model_digest(const LayeredModel& model);

}  // namespace fire
