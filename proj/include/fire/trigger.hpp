#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fire/dataset.hpp"
#include "fire/tensor.hpp"

namespace fire {

enum class TriggerKind { Patch, Blended, Warp };

std::string trigger_kind_name(TriggerKind k);
TriggerKind trigger_kind_from_name(const std::string& name);

// Deterministic trigger-injection operator. Output shape equals input shape
// and values are clamped to [0,1].
struct TriggerOp {
    TriggerKind kind = TriggerKind::Patch;

    // patch: values {C,h,w} stamped at (patch_y, patch_x)
    int patch_x = 0;
    int patch_y = 0;
    Tensor patch_values;

    // blended: out = (1-ratio)*x + ratio*image
    Tensor blend_image;
    double blend_ratio = 0.2;

    // warp: smooth sinusoidal displacement field, bilinear resampling
    double warp_strength = 4.2;
    double warp_freq = 1.5;
    double warp_phase_x = 0.0;
    double warp_phase_y = 0.0;
};

// Solid bright patch at the bottom-right corner.
TriggerOp make_patch_trigger(int image_w, int image_h, int channels, int size = 3);
TriggerOp make_patch_trigger_at(int x, int y, Tensor values);
// Seeded full-image blend pattern.
TriggerOp make_blended_trigger(int image_w, int image_h, int channels, double ratio = 0.2, std::uint64_t seed = 7);
TriggerOp make_warp_trigger(double strength = 4.2, double freq = 1.5);

Tensor apply_trigger(const TriggerOp& t, const Tensor& x);

struct PoisonPlan {
    TriggerOp trigger;
    int target_label = 0;
    double poison_ratio = 0.1;
};

struct PoisonResult {
    Dataset data;
    std::vector<int> poisoned_indices;  // ascending
};

// Rewrites a deterministic poison_ratio fraction of samples: trigger applied,
// label moved to target_label. Selection is seeded and reproducible.
PoisonResult poison_dataset(const Dataset& data, const PoisonPlan& plan, std::uint64_t seed);

struct PairedSample {
    Tensor clean;
    Tensor pois;
    int label = -1;
};

std::vector<PairedSample> make_paired_set(const Dataset& clean, const TriggerOp& t);

}  // namespace fire
