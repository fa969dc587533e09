#pragma once

#include <cstdint>
#include <vector>

#include "fire/dataset.hpp"
#include "fire/model.hpp"

namespace fire {

struct TrainConfig {
    int epochs = 10;
    double learning_rate = 0.05;
    double momentum = 0.9;
    int batch_size = 32;
    std::uint64_t seed = 1;
};

struct TrainResult {
    std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

// He-scaled normal weights, zero biases; deterministic per seed.
void init_params(LayeredModel& model, std::uint64_t seed);

// Gradient buffers mirroring param_tensors() ordering.
struct Gradients {
    std::vector<Tensor> tensors;
};
Gradients make_gradients(const LayeredModel& model);

// Softmax cross-entropy loss for one sample plus parameter/input gradients
// accumulated into `grads` (scaled by `scale`). Returns the loss.
double backward_sample(const LayeredModel& model, const Tensor& x, int label, Gradients& grads, double scale);

// Loss only (used by finite-difference checks).
double sample_loss(const LayeredModel& model, const Tensor& x, int label);

// Minibatch SGD with momentum; fixed per-epoch shuffling derived from the
// seed. Throws DivergenceError when the epoch loss stops being finite.
TrainResult train(LayeredModel& model, const Dataset& data, const TrainConfig& cfg);

double accuracy(const LayeredModel& model, const Dataset& data);

}  // namespace fire
