#include "fire/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fire/errors.hpp"
#include "fire/rng.hpp"

namespace fire {

void init_params(LayeredModel& model, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "init"));
    for (auto& layer : model.layers) {
        if (!layer.has_params()) continue;
        const int fan_in = layer.kind == LayerKind::Dense ? layer.in_dim
                                                          : layer.in_channels * layer.kernel_h * layer.kernel_w;
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (auto& w : layer.weight.data) w = static_cast<float>(rng.normal() * scale);
        for (auto& b : layer.bias.data) b = 0.0f;
    }
}

Gradients make_gradients(const LayeredModel& model) {
    Gradients g;
    for (const auto* t : param_tensors(model)) g.tensors.push_back(Tensor::zeros(t->shape));
    return g;
}

namespace {

struct LayerCache {
    Tensor input;                 // activation fed to the layer
    std::vector<int> pool_argmax; // maxpool routing
};

Tensor forward_cached(const LayeredModel& model, const Tensor& x, std::vector<LayerCache>& caches) {
    caches.resize(model.layers.size());
    Tensor cur = x;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        caches[i].input = cur;
        if (layer.kind == LayerKind::MaxPool2d) {
            cur = maxpool2d_with_argmax(layer, cur, caches[i].pool_argmax);
        } else {
            cur = apply_layer(layer, cur);
        }
    }
    return cur;
}

// softmax cross-entropy; returns loss, writes dlogits.
double softmax_ce(const Tensor& logits, int label, Tensor& dlogits) {
    double max_logit = logits[0];
    for (float v : logits.data) max_logit = std::max(max_logit, static_cast<double>(v));
    double sum = 0.0;
    std::vector<double> ex(logits.numel());
    for (std::size_t i = 0; i < logits.numel(); ++i) {
        ex[i] = std::exp(static_cast<double>(logits[i]) - max_logit);
        sum += ex[i];
    }
    dlogits = Tensor::zeros(logits.shape);
    for (std::size_t i = 0; i < logits.numel(); ++i) {
        const double p = ex[i] / sum;
        dlogits[static_cast<int>(i)] = static_cast<float>(p - (static_cast<int>(i) == label ? 1.0 : 0.0));
    }
    return -(std::log(ex[label] / sum));
}

void dense_backward(const LayerSpec& s, const Tensor& in, const Tensor& dout, Tensor& din, Tensor& dw, Tensor& db,
                    double scale) {
    din = Tensor::zeros(in.shape);
    const float* w = s.weight.data.data();
    for (int o = 0; o < s.out_dim; ++o) {
        const float g = dout[o];
        db[o] += static_cast<float>(scale * g);
        const std::size_t row = static_cast<std::size_t>(o) * s.in_dim;
        for (int i = 0; i < s.in_dim; ++i) {
            dw.data[row + i] += static_cast<float>(scale * g * in[i]);
            din[i] += static_cast<float>(g * w[row + i]);
        }
    }
    din.shape = in.shape;
}

void conv2d_backward(const LayerSpec& s, const Tensor& in, const Tensor& dout, Tensor& din, Tensor& dw, Tensor& db,
                     double scale) {
    const int ih = in.shape[1], iw = in.shape[2];
    const int oh = dout.shape[1], ow = dout.shape[2];
    din = Tensor::zeros(in.shape);
    for (int oc = 0; oc < s.out_channels; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const float g = dout.at(oc, oy, ox);
                if (g == 0.0f) continue;
                db[oc] += static_cast<float>(scale * g);
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
                            dw.data[w_row + kx] += static_cast<float>(scale * g * in.data[in_row + x]);
                            din.data[in_row + x] += g * s.weight.data[w_row + kx];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

double backward_sample(const LayeredModel& model, const Tensor& x, int label, Gradients& grads, double scale) {
    std::vector<LayerCache> caches;
    const Tensor logits = forward_cached(model, x, caches);
    Tensor grad;
    const double loss = softmax_ce(logits, label, grad);

    // map layer -> gradient tensor slot
    int slot = static_cast<int>(grads.tensors.size());
    for (int li = model.depth() - 1; li >= 0; --li) {
        const auto& layer = model.layers[li];
        const Tensor& in = caches[li].input;
        switch (layer.kind) {
            case LayerKind::Dense: {
                Tensor din;
                dense_backward(layer, in, grad, din, grads.tensors[slot - 2], grads.tensors[slot - 1], scale);
                slot -= 2;
                grad = std::move(din);
                break;
            }
            case LayerKind::Conv2d: {
                Tensor din;
                conv2d_backward(layer, in, grad, din, grads.tensors[slot - 2], grads.tensors[slot - 1], scale);
                slot -= 2;
                grad = std::move(din);
                break;
            }
            case LayerKind::Relu: {
                Tensor din = Tensor::zeros(in.shape);
                for (std::size_t i = 0; i < in.numel(); ++i) din.data[i] = in.data[i] > 0.0f ? grad.data[i] : 0.0f;
                grad = std::move(din);
                break;
            }
            case LayerKind::MaxPool2d: {
                Tensor din = Tensor::zeros(in.shape);
                const auto& routing = caches[li].pool_argmax;
                for (std::size_t i = 0; i < routing.size(); ++i) din.data[routing[i]] += grad.data[i];
                grad = std::move(din);
                break;
            }
            case LayerKind::Flatten: {
                grad.shape = in.shape;
                break;
            }
        }
    }
    return loss;
}

double sample_loss(const LayeredModel& model, const Tensor& x, int label) {
    const Tensor logits = forward(model, x).logits;
    Tensor unused;
    return softmax_ce(logits, label, unused);
}

TrainResult train(LayeredModel& model, const Dataset& data, const TrainConfig& cfg) {
    if (data.size() == 0) throw ParamError("train: empty dataset");
    for (auto label : data.labels)
        if (label >= model.num_classes) throw ParamError("train: label out of range");

    TrainResult result;
    auto params = param_tensors(model);
    std::vector<Tensor> velocity;
    for (const auto* p : params) velocity.push_back(Tensor::zeros(p->shape));

    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 0x5u));
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;

        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t batch_end = std::min(pos + static_cast<std::size_t>(cfg.batch_size), order.size());
            const double scale = 1.0 / static_cast<double>(batch_end - pos);
            Gradients grads = make_gradients(model);
            for (std::size_t b = pos; b < batch_end; ++b) {
                const int i = order[b];
                epoch_loss += backward_sample(model, data.images[i], data.labels[i], grads, scale);
            }
            for (std::size_t p = 0; p < params.size(); ++p) {
                auto& w = params[p]->data;
                auto& v = velocity[p].data;
                const auto& g = grads.tensors[p].data;
                for (std::size_t i = 0; i < w.size(); ++i) {
                    v[i] = static_cast<float>(cfg.momentum * v[i] - cfg.learning_rate * g[i]);
                    w[i] += v[i];
                }
            }
            pos = batch_end;
        }

        epoch_loss /= static_cast<double>(data.size());
        if (!std::isfinite(epoch_loss)) throw DivergenceError("training diverged at epoch " + std::to_string(epoch));
        result.epoch_loss.push_back(epoch_loss);
    }
    return result;
}

double accuracy(const LayeredModel& model, const Dataset& data) {
    if (data.size() == 0) throw ParamError("accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (forward(model, data.images[i]).label == data.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace fire
