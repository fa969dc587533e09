#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fire/model.hpp"
#include "fire/trigger.hpp"

namespace fire {

// Latent-space shift attributed to the trigger for one sample at one tap.
struct Displacement {
    int tap = -1;
    Tensor vector;
};

enum class CentroidKind { Pois, PoisAug };

// Per-tap online statistics. Centroids accumulate in double; exported
// directions are float32. A count of zero means the zero-initialized
// centroid has incorporated no stream samples yet.
struct TapStats {
    std::vector<double> clean_centroid;
    bool clean_initialized = false;
    std::vector<double> pois_centroid;
    std::vector<double> pois_aug_centroid;
    std::int64_t count = 0;
    Tensor direction;  // most recent estimate
};

struct DirectionState {
    std::vector<int> taps;                        // ascending
    std::vector<std::vector<int>> latent_shapes;  // parallel to taps
    std::vector<TapStats> stats;                  // parallel to taps

    int tap_slot(int tap) const;  // throws TapError when absent
};

DirectionState make_direction_state(const LayeredModel& model, const std::vector<int>& taps);

// One-time initialization: clean centroid per tap from the reference set.
void init_clean_centroids(DirectionState& state, const LayeredModel& model, const std::vector<Tensor>& clean_set);

// Mean latent of a clean sample set at one tap (double accumulation).
Tensor clean_centroid(const LayeredModel& model, const std::vector<Tensor>& clean_set, int tap);

Displacement samplewise_displacement(const LayeredModel& model, const Tensor& x_clean, const Tensor& x_pois, int tap);

// Mean of per-pair displacements.
Tensor estimate_direction_paired(const LayeredModel& model, const std::vector<PairedSample>& pairs, int tap);

// pois centroid minus clean centroid.
Tensor centroid_diff_direction(const DirectionState& state, int tap);

// pois centroid minus augmented-pois centroid.
Tensor estimate_direction_augmentation(const DirectionState& state, int tap);

// lambda * d_diff + (1 - lambda) * d_aug.
Tensor combine_directions(const Tensor& d_diff, const Tensor& d_aug, double lambda);

// Bumps the per-tap sample counter; call exactly once per stream sample per
// visited tap before updating its centroids.
void increment_count(DirectionState& state, int tap);

// Incremental mean update with the current counter.
void update_centroid(DirectionState& state, int tap, CentroidKind which, const Tensor& latent);

Tensor centroid_as_tensor(const std::vector<double>& centroid, const std::vector<int>& shape);

// Inspection export; same binary envelope as checkpoints (float32 payload).
void save_direction_state(const DirectionState& state, const std::string& path);
DirectionState load_direction_state(const std::string& path);

}  // namespace fire
