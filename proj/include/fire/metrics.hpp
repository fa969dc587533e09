#pragma once

#include <cstdint>
#include <vector>

#include "fire/dataset.hpp"
#include "fire/model.hpp"
#include "fire/repair.hpp"

namespace fire {

struct Metrics {
    double clean_accuracy = 0.0;
    double poisoned_accuracy = 0.0;
    double attack_success_rate = 0.0;
    std::vector<double> pa_curve;
};

// Model-level metrics: CA on the clean set, PA on the poisoned set against
// ground-truth labels, ASR over poisoned samples whose ground truth is not
// the target.
Metrics compute_metrics(const LayeredModel& model, const Dataset& clean_test, const Dataset& poisoned_test,
                        int target_label);

// Stream-level metrics recomputed from the final labels of a report.
Metrics compute_metrics(const StreamReport& report);

// Mean PA over 1-based stream positions [lo, hi], counting only truly
// poisoned, non-failed entries.
double windowed_pa(const StreamReport& report, int lo, int hi);
double windowed_pa(const std::vector<StreamReport>& reports, int lo, int hi);

struct DetectorSpec {
    double poison_fraction = 1.0;  // fraction of stream entries that are truly poisoned
    std::uint64_t seed = 1;
};

// Seeded interleaving with exactly round(fraction * length) poisoned entries;
// entries are drawn without replacement from the pools.
std::vector<StreamEntry> make_stream(const std::vector<StreamEntry>& poisoned_pool,
                                     const std::vector<StreamEntry>& clean_pool, const DetectorSpec& spec, int length);

struct AblationPoint {
    int n_clean = 0;
    double pa_at_position = 0.0;
};

struct AblationSetup {
    const LayeredModel* model = nullptr;
    std::vector<Tensor> clean_pool;            // centroid-initialization candidates
    std::vector<StreamEntry> poisoned_pool;    // stream candidates
    RepairConfig repair;
    AugmentChain augment;
    int target_label = 0;
    int position = 10;   // 1-based stream position to score
    int num_seeds = 50;  // stream seeds averaged per point
    std::uint64_t seed = 1;
};

// Re-runs initialization with each clean-sample count and reports mean PA at
// the probed position across seeded streams (common streams across counts).
std::vector<AblationPoint> clean_count_ablation(const AblationSetup& setup, const std::vector<int>& clean_counts);

struct BenchResult {
    double init_us = 0.0;
    double online_median_us = 0.0;
    double online_p95_us = 0.0;
    double forward_median_us = 0.0;
    int samples = 0;
};

// Times the initialization phase and the per-sample online phase separately;
// the first `warmup` stream samples are excluded from the online statistics.
BenchResult bench_latency(const LayeredModel& model, const RepairConfig& cfg, const AugmentChain& aug,
                          const std::vector<Tensor>& clean_init, const std::vector<StreamEntry>& stream,
                          std::uint64_t stream_aug_seed, int target_label, int warmup = 10);

}  // namespace fire
