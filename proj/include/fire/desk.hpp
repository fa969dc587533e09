#pragma once

#include <cstdint>

#include "fire/dataset.hpp"
#include "fire/metrics.hpp"
#include "fire/model.hpp"
#include "fire/train.hpp"
#include "fire/trigger.hpp"

namespace fire {

// Reference desk-scale experiment: 16x16x3 synthetic 4-class images,
// 4000/1000 split, small conv net with three latent taps.

DataBundle make_desk_data(std::uint64_t seed, int train_count = 4000, int test_count = 1000);

// conv(8)-relu-pool-conv(16)-relu-pool-flatten-dense(64)-relu-dense(classes)
// with taps after conv1, conv2 and the hidden dense layer.
LayeredModel make_desk_model(int width = 16, int height = 16, int channels = 3, int num_classes = 4);

TriggerOp make_desk_trigger(TriggerKind kind, int width = 16, int height = 16, int channels = 3);

TrainConfig desk_train_config(std::uint64_t seed);

struct BackdoorRun {
    LayeredModel model;
    DataBundle data;
    PoisonPlan plan;
    std::vector<int> poisoned_train_indices;
    TrainResult train_log;
    Metrics base;  // CA / ASR / PA of the trained model before any defense
    double train_seconds = 0.0;
};

// Poison the train split, train, and score the result. `seed` drives data,
// init, poison selection and shuffling through derived sub-seeds.
BackdoorRun run_desk_backdoor(TriggerKind kind, std::uint64_t seed, const TrainConfig* override_cfg = nullptr);

// Poisoned copy of a clean test split: trigger applied, ground-truth labels kept.
Dataset poisoned_eval_set(const Dataset& clean_test, const TriggerOp& trigger);

// Clean reference pool with classes interleaved round-robin, so any prefix is
// near class-balanced. Used by the clean-sample-count ablation.
std::vector<Tensor> balanced_clean_pool(const Dataset& split, int count);

}  // namespace fire
