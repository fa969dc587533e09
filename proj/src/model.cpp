#include "fire/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fire/errors.hpp"
#include "fire/rng.hpp"

namespace fire {

std::string layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2d: return "maxpool2d";
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "dense") return LayerKind::Dense;
    if (name == "conv2d") return LayerKind::Conv2d;
    if (name == "relu") return LayerKind::Relu;
    if (name == "maxpool2d") return LayerKind::MaxPool2d;
    if (name == "flatten") return LayerKind::Flatten;
    throw ParamError("unknown layer kind: " + name);
}

LayerSpec dense_layer(int in_dim, int out_dim) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.in_dim = in_dim;
    s.out_dim = out_dim;
    s.weight = Tensor::zeros({out_dim, in_dim});
    s.bias = Tensor::zeros({out_dim});
    return s;
}

LayerSpec conv2d_layer(int in_channels, int out_channels, int kernel, int stride, int pad) {
    LayerSpec s;
    s.kind = LayerKind::Conv2d;
    s.in_channels = in_channels;
    s.out_channels = out_channels;
    s.kernel_h = kernel;
    s.kernel_w = kernel;
    s.stride = stride;
    s.pad = pad;
    s.weight = Tensor::zeros({out_channels, in_channels, kernel, kernel});
    s.bias = Tensor::zeros({out_channels});
    return s;
}

LayerSpec relu_layer() {
    LayerSpec s;
    s.kind = LayerKind::Relu;
    return s;
}

LayerSpec maxpool2d_layer(int pool, int stride) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool2d;
    s.pool = pool;
    s.pool_stride = stride > 0 ? stride : pool;
    return s;
}

LayerSpec flatten_layer() {
    LayerSpec s;
    s.kind = LayerKind::Flatten;
    return s;
}

bool LayeredModel::has_tap(int tap) const {
    return std::find(taps.begin(), taps.end(), tap) != taps.end();
}

std::vector<int> layer_output_shape(const LayerSpec& spec, const std::vector<int>& in_shape) {
    switch (spec.kind) {
        case LayerKind::Dense: {
            if (Tensor::shape_numel(in_shape) != static_cast<std::size_t>(spec.in_dim))
                throw ShapeError("dense layer expects " + std::to_string(spec.in_dim) + " inputs, got " +
                                 shape_str(in_shape));
            return {spec.out_dim};
        }
        case LayerKind::Conv2d: {
            if (in_shape.size() != 3 || in_shape[0] != spec.in_channels)
                throw ShapeError("conv2d layer expects {" + std::to_string(spec.in_channels) +
                                 ",H,W} input, got " + shape_str(in_shape));
            const int h = (in_shape[1] + 2 * spec.pad - spec.kernel_h) / spec.stride + 1;
            const int w = (in_shape[2] + 2 * spec.pad - spec.kernel_w) / spec.stride + 1;
            if (h <= 0 || w <= 0) throw ShapeError("conv2d output would be empty for input " + shape_str(in_shape));
            return {spec.out_channels, h, w};
        }
        case LayerKind::Relu:
            return in_shape;
        case LayerKind::MaxPool2d: {
            if (in_shape.size() != 3) throw ShapeError("maxpool2d expects {C,H,W} input, got " + shape_str(in_shape));
            const int h = (in_shape[1] - spec.pool) / spec.pool_stride + 1;
            const int w = (in_shape[2] - spec.pool) / spec.pool_stride + 1;
            if (h <= 0 || w <= 0) throw ShapeError("maxpool2d output would be empty for input " + shape_str(in_shape));
            return {in_shape[0], h, w};
        }
        case LayerKind::Flatten:
            return {static_cast<int>(Tensor::shape_numel(in_shape))};
    }
    throw ShapeError("unreachable layer kind");
}

void validate_model(const LayeredModel& model) {
    if (model.layers.empty()) throw ShapeError("model has no layers");
    std::vector<int> shape = model.input_shape;
    for (const auto& layer : model.layers) shape = layer_output_shape(layer, shape);
    if (Tensor::shape_numel(shape) != static_cast<std::size_t>(model.num_classes))
        throw ShapeError("final output " + shape_str(shape) + " does not match num_classes " +
                         std::to_string(model.num_classes));
    int prev = -1;
    for (int tap : model.taps) {
        if (tap <= prev) throw TapError("tap indices must be strictly increasing");
        if (tap < 0 || tap >= model.depth()) throw TapError("tap " + std::to_string(tap) + " out of range");
        prev = tap;
    }
}

std::vector<int> latent_shape(const LayeredModel& model, int tap) {
    if (tap < 0 || tap >= model.depth()) throw TapError("tap " + std::to_string(tap) + " out of range");
    std::vector<int> shape = model.input_shape;
    for (int i = 0; i <= tap; ++i) shape = layer_output_shape(model.layers[i], shape);
    return shape;
}

namespace {

Tensor dense_forward(const LayerSpec& s, const Tensor& in) {
    Tensor out = Tensor::zeros({s.out_dim});
    const float* w = s.weight.data.data();
    for (int o = 0; o < s.out_dim; ++o) {
        double acc = s.bias[o];
        const float* row = w + static_cast<std::size_t>(o) * s.in_dim;
        for (int i = 0; i < s.in_dim; ++i) acc += static_cast<double>(row[i]) * in[i];
        out[o] = static_cast<float>(acc);
    }
    return out;
}

Tensor conv2d_forward(const LayerSpec& s, const Tensor& in) {
    const int ih = in.shape[1], iw = in.shape[2];
    const int oh = (ih + 2 * s.pad - s.kernel_h) / s.stride + 1;
    const int ow = (iw + 2 * s.pad - s.kernel_w) / s.stride + 1;
    Tensor out = Tensor::zeros({s.out_channels, oh, ow});
    for (int oc = 0; oc < s.out_channels; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = s.bias[oc];
                for (int ic = 0; ic < s.in_channels; ++ic) {
                    for (int ky = 0; ky < s.kernel_h; ++ky) {
                        const int y = oy * s.stride + ky - s.pad;
                        if (y < 0 || y >= ih) continue;
                        const std::size_t in_row = (static_cast<std::size_t>(ic) * ih + y) * iw;
                        const std::size_t w_row =
                            ((static_cast<std::size_t>(oc) * s.in_channels + ic) * s.kernel_h + ky) * s.kernel_w;
                        for (int kx = 0; kx < s.kernel_w; ++kx) {
                            const int x = ox * s.stride + kx - s.pad;
                            if (x < 0 || x >= iw) continue;
                            acc += static_cast<double>(in.data[in_row + x]) * s.weight.data[w_row + kx];
                        }
                    }
                }
                out.at(oc, oy, ox) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

Tensor maxpool_forward(const LayerSpec& s, const Tensor& in, std::vector<int>* argmax_idx) {
    const int c = in.shape[0], ih = in.shape[1], iw = in.shape[2];
    const int oh = (ih - s.pool) / s.pool_stride + 1;
    const int ow = (iw - s.pool) / s.pool_stride + 1;
    Tensor out = Tensor::zeros({c, oh, ow});
    if (argmax_idx) argmax_idx->assign(out.numel(), 0);
    std::size_t oi = 0;
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox, ++oi) {
                float best = -std::numeric_limits<float>::infinity();
                int best_idx = 0;
                for (int ky = 0; ky < s.pool; ++ky) {
                    for (int kx = 0; kx < s.pool; ++kx) {
                        const int y = oy * s.pool_stride + ky;
                        const int x = ox * s.pool_stride + kx;
                        const int idx = (ch * ih + y) * iw + x;
                        if (in.data[idx] > best) {
                            best = in.data[idx];
                            best_idx = idx;
                        }
                    }
                }
                out.data[oi] = best;
                if (argmax_idx) (*argmax_idx)[oi] = best_idx;
            }
        }
    }
    return out;
}

}  // namespace

Tensor apply_layer(const LayerSpec& spec, const Tensor& in) {
    // Validates shape as a side effect.
    layer_output_shape(spec, in.shape);
    switch (spec.kind) {
        case LayerKind::Dense:
            return dense_forward(spec, in);
        case LayerKind::Conv2d:
            return conv2d_forward(spec, in);
        case LayerKind::Relu: {
            Tensor out = in;
            for (auto& v : out.data) v = v > 0.0f ? v : 0.0f;
            return out;
        }
        case LayerKind::MaxPool2d:
            return maxpool_forward(spec, in, nullptr);
        case LayerKind::Flatten: {
            Tensor out = in;
            out.shape = {static_cast<int>(in.numel())};
            return out;
        }
    }
    throw ShapeError("unreachable layer kind");
}

Tensor maxpool2d_with_argmax(const LayerSpec& spec, const Tensor& in, std::vector<int>& argmax_idx) {
    return maxpool_forward(spec, in, &argmax_idx);
}

PredictionOutcome forward(const LayeredModel& model, const Tensor& x) {
    if (!same_shape(x.shape, model.input_shape))
        throw ShapeError("input shape " + shape_str(x.shape) + " does not match model input " +
                         shape_str(model.input_shape));
    Tensor cur = x;
    for (const auto& layer : model.layers) cur = apply_layer(layer, cur);
    PredictionOutcome out;
    out.label = argmax(cur);
    out.logits = std::move(cur);
    return out;
}

Tensor forward_to(const LayeredModel& model, const Tensor& x, int tap) {
    if (!model.has_tap(tap)) throw TapError("tap " + std::to_string(tap) + " is not a model tap");
    if (!same_shape(x.shape, model.input_shape))
        throw ShapeError("input shape " + shape_str(x.shape) + " does not match model input " +
                         shape_str(model.input_shape));
    Tensor cur = x;
    for (int i = 0; i <= tap; ++i) cur = apply_layer(model.layers[i], cur);
    return cur;
}

PredictionOutcome forward_from(const LayeredModel& model, const Tensor& latent, int tap) {
    if (!model.has_tap(tap)) throw TapError("tap " + std::to_string(tap) + " is not a model tap");
    if (!same_shape(latent.shape, latent_shape(model, tap)))
        throw ShapeError("latent shape " + shape_str(latent.shape) + " does not match tap " + std::to_string(tap) +
                         " shape " + shape_str(latent_shape(model, tap)));
    Tensor cur = latent;
    for (int i = tap + 1; i < model.depth(); ++i) cur = apply_layer(model.layers[i], cur);
    PredictionOutcome out;
    out.label = argmax(cur);
    out.logits = std::move(cur);
    return out;
}

ForwardTrace forward_with_taps(const LayeredModel& model, const Tensor& x, const std::vector<int>& taps) {
    if (!same_shape(x.shape, model.input_shape))
        throw ShapeError("input shape " + shape_str(x.shape) + " does not match model input " +
                         shape_str(model.input_shape));
    ForwardTrace trace;
    trace.latents.reserve(taps.size());
    Tensor cur = x;
    std::size_t next_tap = 0;
    for (int i = 0; i < model.depth(); ++i) {
        cur = apply_layer(model.layers[i], cur);
        while (next_tap < taps.size() && taps[next_tap] == i) {
            trace.latents.push_back(cur);
            ++next_tap;
        }
    }
    if (next_tap != taps.size()) throw TapError("tap list not ascending or out of range");
    trace.label = argmax(cur);
    trace.logits = std::move(cur);
    return trace;
}

std::vector<Tensor*> param_tensors(LayeredModel& model) {
    std::vector<Tensor*> out;
    for (auto& layer : model.layers) {
        if (!layer.has_params()) continue;
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
    return out;
}

std::vector<const Tensor*> param_tensors(const LayeredModel& model) {
    std::vector<const Tensor*> out;
    for (const auto& layer : model.layers) {
        if (!layer.has_params()) continue;
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
    return out;
}

std::size_t param_count(const LayeredModel& model) {
    std::size_t n = 0;
    for (const auto* t : param_tensors(model)) n += t->numel();
    return n;
}

std::uint64_t model_digest(const LayeredModel& model) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto* t : param_tensors(model)) h = tensor_digest(*t, h);
    return h;
}

}  // namespace fire
