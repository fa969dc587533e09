#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fire/tensor.hpp"

namespace fire {

// Labeled image set; images are {C,H,W} tensors in [0,1].
struct Dataset {
    int width = 0;
    int height = 0;
    int channels = 0;
    int num_classes = 0;
    std::vector<Tensor> images;
    std::vector<std::uint16_t> labels;

    std::size_t size() const { return images.size(); }
};

struct DataBundle {
    Dataset train;
    Dataset test;
};

std::uint64_t dataset_digest(const DataBundle& bundle);

// File layout: 4-byte little-endian JSON index length, JSON index (shape,
// class count, split sizes), raw float32 image payload (train then test),
// raw uint16 label payload (train then test).
void save_dataset(const DataBundle& bundle, const std::string& path);
DataBundle load_dataset(const std::string& path);

// Seeded synthetic class-conditional blob/texture images.
struct SynthConfig {
    int width = 16;
    int height = 16;
    int channels = 3;
    int num_classes = 4;
    int train_count = 4000;
    int test_count = 1000;
    std::uint64_t seed = 1;
};
DataBundle make_synthetic_data(const SynthConfig& cfg);

}  // namespace fire
