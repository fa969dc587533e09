#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fire/augment.hpp"
#include "fire/direction.hpp"
#include "fire/model.hpp"
#include "fire/trigger.hpp"

namespace fire {

enum class RepairMode { Subtract, Project };
// combined: mixed centroid-difference + augmentation direction;
// augment_only: augmentation direction, no clean statistics needed;
// no_augment: centroid difference only, no augmented forward pass.
enum class StreamVariant { Combined, AugmentOnly, NoAugment };

std::string repair_mode_name(RepairMode m);
RepairMode repair_mode_from_name(const std::string& name);
std::string stream_variant_name(StreamVariant v);
StreamVariant stream_variant_from_name(const std::string& name);

struct RepairConfig {
    double lambda = 0.5;  // mixes centroid-difference vs augmentation estimate
    double alpha = 1.0;   // repair strength
    RepairMode mode = RepairMode::Subtract;
    StreamVariant variant = StreamVariant::Combined;
    std::vector<int> taps;  // ascending subset of the model taps
};

void validate_repair_config(const RepairConfig& cfg, const LayeredModel& model);

// latent - alpha * direction
Tensor repair_subtract(const Tensor& latent, const Tensor& direction, double alpha);

// Removes the direction-aligned component of (latent - clean_centroid).
// Throws DegenerateDirectionError when the direction norm is ~zero.
Tensor repair_project(const Tensor& latent, const Tensor& direction, const Tensor& clean_centroid,
                      double epsilon = 1e-8);

// Forward to the tap, repair there, forward the tail.
PredictionOutcome repaired_predict(const LayeredModel& model, const Tensor& x, int tap, const Tensor& direction,
                                   const RepairConfig& cfg, const Tensor* clean_centroid = nullptr);

struct RepairOutcome {
    int unmitigated_label = -1;
    int final_label = -1;
    int exit_tap = -1;  // -1 when no tap changed the prediction
    std::vector<int> per_tap_labels;  // repaired labels at visited taps, in order
};

struct TapTrace {
    int tap = -1;
    Tensor repaired_latent;
    int label = -1;
};

// One streaming iteration: record the unmitigated prediction, update per-tap
// statistics in ascending tap order, repair, and emit the first label that
// differs. Mutates `state`; taps past the exit tap receive no update.
RepairOutcome mitigate_one(const LayeredModel& model, DirectionState& state, const Tensor& x, const RepairConfig& cfg,
                           const AugmentChain& aug, std::uint64_t aug_seed, std::vector<TapTrace>* trace = nullptr);

struct StreamEntry {
    Tensor x;
    int true_label = -1;
    bool poisoned = true;
};

struct StreamRecord {
    int index = 0;
    int unmitigated = -1;
    int final_label = -1;
    int exit_tap = -1;
    std::vector<int> per_tap_labels;
    double latency_us = 0.0;
    int true_label = -1;
    bool poisoned = true;
    bool failed = false;
    std::string error;
};

struct StreamTiming {
    double init_us = 0.0;
    double online_median_us = 0.0;
    double online_p95_us = 0.0;
};

struct StreamReport {
    std::vector<StreamRecord> records;
    StreamTiming timing;
    // aggregates over non-failed entries (final labels)
    double clean_accuracy = 0.0;   // clean entries vs ground truth
    double poisoned_accuracy = 0.0;  // poisoned entries vs ground truth
    double attack_success_rate = 0.0;  // poisoned entries hitting the target
    std::vector<double> pa_curve;  // per-position correctness, one per record
    int target_label = -1;
};

// Processes the stream strictly in arrival order. Per-sample augmentation
// seeds derive from (stream_aug_seed, position). Samples with mismatched
// shapes are recorded as failed and skipped.
StreamReport run_stream(const LayeredModel& model, DirectionState& state, const std::vector<StreamEntry>& stream,
                        const RepairConfig& cfg, const AugmentChain& aug, std::uint64_t stream_aug_seed,
                        int target_label);

struct SweepRow {
    int tap = -1;
    double poisoned_accuracy = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    int best_tap = -1;  // argmax PA, lowest tap on ties
};

// Argmax row; the earliest tap wins ties.
int select_best_tap(const std::vector<SweepRow>& rows);

// Manual per-tap intervention study: estimate a paired direction at each tap
// from the first `direction_pairs` pairs, then score PA over the whole set.
SweepResult layer_sweep(const LayeredModel& model, const std::vector<PairedSample>& pairs,
                        const std::vector<int>& taps, const RepairConfig& cfg, int direction_pairs = 100);

}  // namespace fire
