#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fire/model.hpp"

namespace fire {

// Binary envelope: 5-byte magic "FIRE1", 4-byte little-endian JSON length,
// UTF-8 JSON metadata, raw little-endian float32 payload.
inline constexpr char kEnvelopeMagic[5] = {'F', 'I', 'R', 'E', '1'};

void write_envelope(const std::string& path, const nlohmann::json& meta, const std::vector<float>& payload);
std::pair<nlohmann::json, std::vector<float>> read_envelope(const std::string& path);

struct CheckpointMeta {
    std::uint64_t seed = 0;
    int epochs = 0;
    std::uint64_t dataset_digest = 0;
};

nlohmann::json model_arch_json(const LayeredModel& model);
LayeredModel model_from_arch_json(const nlohmann::json& arch);

void save_checkpoint(const LayeredModel& model, const CheckpointMeta& meta, const std::string& path);
LayeredModel load_checkpoint(const std::string& path, CheckpointMeta* meta_out = nullptr);

}  // namespace fire
