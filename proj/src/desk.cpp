#include "fire/desk.hpp"

#include <chrono>

#include "fire/errors.hpp"
#include "fire/rng.hpp"

namespace fire {

DataBundle make_desk_data(std::uint64_t seed, int train_count, int test_count) {
    SynthConfig cfg;
    cfg.train_count = train_count;
    cfg.test_count = test_count;
    cfg.seed = derive_seed(seed, "data");
    return make_synthetic_data(cfg);
}

LayeredModel make_desk_model(int width, int height, int channels, int num_classes) {
    LayeredModel model;
    model.input_shape = {channels, height, width};
    model.num_classes = num_classes;
    model.layers.push_back(conv2d_layer(channels, 8, 3));  // 0: first latent tap
    model.layers.push_back(relu_layer());
    model.layers.push_back(maxpool2d_layer(2));
    model.layers.push_back(conv2d_layer(8, 16, 3));        // 3: second latent tap
    model.layers.push_back(relu_layer());
    model.layers.push_back(maxpool2d_layer(2));
    model.layers.push_back(flatten_layer());

    std::vector<int> shape = model.input_shape;
    for (const auto& layer : model.layers) shape = layer_output_shape(layer, shape);
    const int flat = shape[0];

    model.layers.push_back(dense_layer(flat, 64));         // 7: hidden latent tap
    model.layers.push_back(relu_layer());
    model.layers.push_back(dense_layer(64, num_classes));
    model.taps = {0, 3, 7};
    validate_model(model);
    return model;
}

TriggerOp make_desk_trigger(TriggerKind kind, int width, int height, int channels) {
    switch (kind) {
        case TriggerKind::Patch: return make_patch_trigger(width, height, channels, 4);
        case TriggerKind::Blended: return make_blended_trigger(width, height, channels, 0.2);
        case TriggerKind::Warp: return make_warp_trigger(4.2, 1.5);
    }
    throw ParamError("unreachable trigger kind");
}

TrainConfig desk_train_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.learning_rate = 0.05;
    cfg.momentum = 0.9;
    cfg.batch_size = 32;
    cfg.seed = derive_seed(seed, "train");
    return cfg;
}

BackdoorRun run_desk_backdoor(TriggerKind kind, std::uint64_t seed, const TrainConfig* override_cfg) {
    BackdoorRun run;
    run.data = make_desk_data(seed);

    run.plan.trigger = make_desk_trigger(kind, run.data.train.width, run.data.train.height, run.data.train.channels);
    run.plan.target_label = 0;
    run.plan.poison_ratio = 0.1;

    PoisonResult poisoned = poison_dataset(run.data.train, run.plan, derive_seed(seed, "poison"));
    run.poisoned_train_indices = std::move(poisoned.poisoned_indices);

    run.model = make_desk_model(run.data.train.width, run.data.train.height, run.data.train.channels,
                                run.data.train.num_classes);
    const TrainConfig cfg = override_cfg ? *override_cfg : desk_train_config(seed);
    init_params(run.model, cfg.seed);

    const auto t0 = std::chrono::steady_clock::now();
    run.train_log = train(run.model, poisoned.data, cfg);
    run.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const Dataset pois_test = poisoned_eval_set(run.data.test, run.plan.trigger);
    run.base = compute_metrics(run.model, run.data.test, pois_test, run.plan.target_label);
    return run;
}

Dataset poisoned_eval_set(const Dataset& clean_test, const TriggerOp& trigger) {
    Dataset out = clean_test;
    for (std::size_t i = 0; i < out.images.size(); ++i) out.images[i] = apply_trigger(trigger, clean_test.images[i]);
    return out;
}

std::vector<Tensor> balanced_clean_pool(const Dataset& split, int count) {
    std::vector<std::vector<int>> per_class(split.num_classes);
    for (std::size_t i = 0; i < split.size(); ++i) per_class[split.labels[i]].push_back(static_cast<int>(i));
    std::vector<Tensor> pool;
    pool.reserve(count);
    std::size_t round = 0;
    while (static_cast<int>(pool.size()) < count) {
        bool advanced = false;
        for (int c = 0; c < split.num_classes && static_cast<int>(pool.size()) < count; ++c) {
            if (round < per_class[c].size()) {
                pool.push_back(split.images[per_class[c][round]]);
                advanced = true;
            }
        }
        if (!advanced) throw ParamError("balanced_clean_pool: not enough samples");
        ++round;
    }
    return pool;
}

}  // namespace fire
