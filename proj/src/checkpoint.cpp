#include "fire/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "fire/errors.hpp"

namespace fire {

void write_envelope(const std::string& path, const nlohmann::json& meta, const std::vector<float>& payload) {
    const std::string meta_str = meta.dump();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open file for writing: " + path);
    os.write(kEnvelopeMagic, 5);
    const std::uint32_t len = static_cast<std::uint32_t>(meta_str.size());
    unsigned char b[4] = {static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8),
                          static_cast<unsigned char>(len >> 16), static_cast<unsigned char>(len >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
    os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    os.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!os) throw IoError("short write: " + path);
}

std::pair<nlohmann::json, std::vector<float>> read_envelope(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open file: " + path);
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, kEnvelopeMagic, 5) != 0) throw IoError("bad magic in " + path);
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    const std::uint32_t len = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                              (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    std::string meta_str(len, '\0');
    is.read(meta_str.data(), len);
    if (!is) throw IoError("truncated metadata in " + path);

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad metadata in " + path + ": " + e.what());
    }

    std::vector<float> payload;
    const auto pos = is.tellg();
    is.seekg(0, std::ios::end);
    const auto end = is.tellg();
    is.seekg(pos);
    const std::size_t bytes = static_cast<std::size_t>(end - pos);
    if (bytes % sizeof(float) != 0) throw IoError("payload not float32-aligned in " + path);
    payload.resize(bytes / sizeof(float));
    is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(bytes));
    if (!is) throw IoError("truncated payload in " + path);
    return {std::move(meta), std::move(payload)};
}

nlohmann::json model_arch_json(const LayeredModel& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : model.layers) {
        nlohmann::json j{{"kind", layer_kind_name(l.kind)}};
        switch (l.kind) {
            case LayerKind::Dense:
                j["in_dim"] = l.in_dim;
                j["out_dim"] = l.out_dim;
                break;
            case LayerKind::Conv2d:
                j["in_channels"] = l.in_channels;
                j["out_channels"] = l.out_channels;
                j["kernel"] = l.kernel_h;
                j["stride"] = l.stride;
                j["pad"] = l.pad;
                break;
            case LayerKind::MaxPool2d:
                j["pool"] = l.pool;
                j["stride"] = l.pool_stride;
                break;
            default:
                break;
        }
        layers.push_back(std::move(j));
    }
    return nlohmann::json{{"layers", layers},
                          {"taps", model.taps},
                          {"input_shape", model.input_shape},
                          {"num_classes", model.num_classes}};
}

LayeredModel model_from_arch_json(const nlohmann::json& arch) {
    LayeredModel model;
    for (const auto& j : arch.at("layers")) {
        const auto kind = layer_kind_from_name(j.at("kind").get<std::string>());
        switch (kind) {
            case LayerKind::Dense:
                model.layers.push_back(dense_layer(j.at("in_dim").get<int>(), j.at("out_dim").get<int>()));
                break;
            case LayerKind::Conv2d:
                model.layers.push_back(conv2d_layer(j.at("in_channels").get<int>(), j.at("out_channels").get<int>(),
                                                    j.at("kernel").get<int>(), j.at("stride").get<int>(),
                                                    j.at("pad").get<int>()));
                break;
            case LayerKind::Relu:
                model.layers.push_back(relu_layer());
                break;
            case LayerKind::MaxPool2d:
                model.layers.push_back(maxpool2d_layer(j.at("pool").get<int>(), j.at("stride").get<int>()));
                break;
            case LayerKind::Flatten:
                model.layers.push_back(flatten_layer());
                break;
        }
    }
    model.taps = arch.at("taps").get<std::vector<int>>();
    model.input_shape = arch.at("input_shape").get<std::vector<int>>();
    model.num_classes = arch.at("num_classes").get<int>();
    validate_model(model);
    return model;
}

void save_checkpoint(const LayeredModel& model, const CheckpointMeta& meta, const std::string& path) {
    nlohmann::json j{{"kind", "checkpoint"},
                     {"arch", model_arch_json(model)},
                     {"seed", meta.seed},
                     {"epochs", meta.epochs},
                     {"dataset_digest", meta.dataset_digest},
                     {"param_count", param_count(model)}};
    std::vector<float> payload;
    payload.reserve(param_count(model));
    for (const auto* t : param_tensors(model)) payload.insert(payload.end(), t->data.begin(), t->data.end());
    write_envelope(path, j, payload);
}

LayeredModel load_checkpoint(const std::string& path, CheckpointMeta* meta_out) {
    auto [meta, payload] = read_envelope(path);
    if (meta.value("kind", "") != "checkpoint") throw IoError("not a checkpoint file: " + path);
    LayeredModel model = model_from_arch_json(meta.at("arch"));
    if (payload.size() != param_count(model))
        throw IoError("payload length " + std::to_string(payload.size()) + " does not match declared parameter count " +
                      std::to_string(param_count(model)));
    std::size_t off = 0;
    for (auto* t : param_tensors(model)) {
        std::copy(payload.begin() + off, payload.begin() + off + t->numel(), t->data.begin());
        off += t->numel();
    }
    if (meta_out) {
        meta_out->seed = meta.value("seed", std::uint64_t{0});
        meta_out->epochs = meta.value("epochs", 0);
        meta_out->dataset_digest = meta.value("dataset_digest", std::uint64_t{0});
    }
    return model;
}

}  // namespace fire
