#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fire/augment.hpp"
#include "fire/dataset.hpp"
#include "fire/metrics.hpp"
#include "fire/repair.hpp"
#include "fire/train.hpp"
#include "fire/trigger.hpp"

namespace fire {

inline constexpr const char* kToolVersion = "0.1.0";

// Trigger parameters as configured; materialized against the image geometry.
struct TriggerSpec {
    TriggerKind kind = TriggerKind::Patch;
    int patch_size = 4;
    int patch_x = -1;  // -1: bottom-right default
    int patch_y = -1;
    double blend_ratio = 0.2;
    std::uint64_t blend_seed = 7;
    double warp_strength = 4.2;
    double warp_freq = 1.5;
};

TriggerOp materialize_trigger(const TriggerSpec& spec, int width, int height, int channels);

// One structured config drives every subcommand. All randomness flows from
// `seed` through named sub-seeds (data/train/poison/stream/augment).
struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    std::string dataset_path = "dataset.bin";
    int width = 16;
    int height = 16;
    int channels = 3;
    int classes = 4;
    int train_count = 4000;
    int test_count = 1000;

    std::string checkpoint_path = "model.ckpt";
    std::vector<int> taps = {0, 3, 7};

    int epochs = 10;
    double learning_rate = 0.05;
    double momentum = 0.9;
    int batch_size = 32;

    TriggerSpec trigger;
    int target_label = 0;
    double poison_ratio = 0.1;

    AugmentChain augment = default_augment_chain();

    double lambda = 0.5;
    double alpha = 1.0;
    RepairMode mode = RepairMode::Subtract;
    StreamVariant variant = StreamVariant::Combined;

    int clean_count = 100;
    double poison_fraction = 1.0;
    int stream_length = 200;
    std::vector<std::uint64_t> stream_seeds = {1, 2, 3, 4, 5};

    int sweep_direction_pairs = 100;
    int sweep_eval_count = 500;

    std::vector<int> ablation_clean_counts = {1, 2, 5, 10, 20, 50, 100};
    int ablation_position = 10;
    int ablation_seeds = 50;

    int bench_warmup = 20;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

// Dotted-path override, e.g. "repair.lambda=0.25". Values parse as JSON when
// possible, otherwise as strings.
void apply_override(nlohmann::json& j, const std::string& assignment);

// FNV-1a of the canonical (sorted-key) JSON dump.
std::string config_hash_hex(const ExperimentConfig& cfg);

RepairConfig repair_config_of(const ExperimentConfig& cfg);
SynthConfig synth_config_of(const ExperimentConfig& cfg);
TrainConfig train_config_of(const ExperimentConfig& cfg);

}  // namespace fire
