#include "fire/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fire/errors.hpp"
#include "fire/rng.hpp"

namespace fire {

TriggerOp materialize_trigger(const TriggerSpec& spec, int width, int height, int channels) {
    switch (spec.kind) {
        case TriggerKind::Patch: {
            if (spec.patch_x < 0 && spec.patch_y < 0)
                return make_patch_trigger(width, height, channels, spec.patch_size);
            return make_patch_trigger_at(spec.patch_x, spec.patch_y,
                                         Tensor::full({channels, spec.patch_size, spec.patch_size}, 1.0f));
        }
        case TriggerKind::Blended:
            return make_blended_trigger(width, height, channels, spec.blend_ratio, spec.blend_seed);
        case TriggerKind::Warp:
            return make_warp_trigger(spec.warp_strength, spec.warp_freq);
    }
    throw ConfigError("unreachable trigger kind");
}

namespace {

nlohmann::json augment_to_json(const Augmentation& a) {
    nlohmann::json j{{"kind", augment_kind_name(a.kind)}};
    switch (a.kind) {
        case AugmentKind::ColorJitter:
            j["brightness"] = a.brightness;
            j["contrast"] = a.contrast;
            break;
        case AugmentKind::GaussianBlur:
            j["kernel"] = a.blur_kernel;
            j["sigma"] = a.blur_sigma;
            break;
        case AugmentKind::GaussianNoise:
            j["sigma"] = a.noise_sigma;
            break;
        case AugmentKind::ShrinkPad:
            j["ratio"] = a.shrink_ratio;
            break;
    }
    return j;
}

Augmentation augment_from_json(const nlohmann::json& j) {
    Augmentation a;
    a.kind = augment_kind_from_name(j.at("kind").get<std::string>());
    switch (a.kind) {
        case AugmentKind::ColorJitter:
            a.brightness = j.value("brightness", 0.2);
            a.contrast = j.value("contrast", 0.2);
            break;
        case AugmentKind::GaussianBlur:
            a.blur_kernel = j.value("kernel", 3);
            a.blur_sigma = j.value("sigma", 1.0);
            break;
        case AugmentKind::GaussianNoise:
            a.noise_sigma = j.value("sigma", 0.05);
            break;
        case AugmentKind::ShrinkPad:
            a.shrink_ratio = j.value("ratio", 0.9);
            break;
    }
    return a;
}

}  // namespace

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json aug = nlohmann::json::array();
    for (const auto& a : cfg.augment) aug.push_back(augment_to_json(a));

    return nlohmann::json{
        {"seed", cfg.seed},
        {"out_dir", cfg.out_dir},
        {"data",
         {{"path", cfg.dataset_path},
          {"width", cfg.width},
          {"height", cfg.height},
          {"channels", cfg.channels},
          {"classes", cfg.classes},
          {"train_count", cfg.train_count},
          {"test_count", cfg.test_count}}},
        {"model", {{"checkpoint", cfg.checkpoint_path}, {"taps", cfg.taps}}},
        {"train",
         {{"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate},
          {"momentum", cfg.momentum},
          {"batch_size", cfg.batch_size}}},
        {"poison",
         {{"kind", trigger_kind_name(cfg.trigger.kind)},
          {"target_label", cfg.target_label},
          {"ratio", cfg.poison_ratio},
          {"patch_size", cfg.trigger.patch_size},
          {"patch_x", cfg.trigger.patch_x},
          {"patch_y", cfg.trigger.patch_y},
          {"blend_ratio", cfg.trigger.blend_ratio},
          {"blend_seed", cfg.trigger.blend_seed},
          {"warp_strength", cfg.trigger.warp_strength},
          {"warp_freq", cfg.trigger.warp_freq}}},
        {"augment", aug},
        {"repair",
         {{"lambda", cfg.lambda},
          {"alpha", cfg.alpha},
          {"mode", repair_mode_name(cfg.mode)},
          {"variant", stream_variant_name(cfg.variant)}}},
        {"clean_count", cfg.clean_count},
        {"detector", {{"poison_fraction", cfg.poison_fraction}}},
        {"stream", {{"length", cfg.stream_length}, {"seeds", cfg.stream_seeds}}},
        {"sweep", {{"direction_pairs", cfg.sweep_direction_pairs}, {"eval_count", cfg.sweep_eval_count}}},
        {"ablation",
         {{"clean_counts", cfg.ablation_clean_counts},
          {"position", cfg.ablation_position},
          {"seeds", cfg.ablation_seeds}}},
        {"bench", {{"warmup", cfg.bench_warmup}}},
    };
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        if (j.contains("data")) {
            const auto& d = j.at("data");
            cfg.dataset_path = d.value("path", cfg.dataset_path);
            cfg.width = d.value("width", cfg.width);
            cfg.height = d.value("height", cfg.height);
            cfg.channels = d.value("channels", cfg.channels);
            cfg.classes = d.value("classes", cfg.classes);
            cfg.train_count = d.value("train_count", cfg.train_count);
            cfg.test_count = d.value("test_count", cfg.test_count);
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            cfg.checkpoint_path = m.value("checkpoint", cfg.checkpoint_path);
            cfg.taps = m.value("taps", cfg.taps);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            cfg.epochs = t.value("epochs", cfg.epochs);
            cfg.learning_rate = t.value("learning_rate", cfg.learning_rate);
            cfg.momentum = t.value("momentum", cfg.momentum);
            cfg.batch_size = t.value("batch_size", cfg.batch_size);
        }
        if (j.contains("poison")) {
            const auto& p = j.at("poison");
            cfg.trigger.kind = trigger_kind_from_name(p.value("kind", trigger_kind_name(cfg.trigger.kind)));
            cfg.target_label = p.value("target_label", cfg.target_label);
            cfg.poison_ratio = p.value("ratio", cfg.poison_ratio);
            cfg.trigger.patch_size = p.value("patch_size", cfg.trigger.patch_size);
            cfg.trigger.patch_x = p.value("patch_x", cfg.trigger.patch_x);
            cfg.trigger.patch_y = p.value("patch_y", cfg.trigger.patch_y);
            cfg.trigger.blend_ratio = p.value("blend_ratio", cfg.trigger.blend_ratio);
            cfg.trigger.blend_seed = p.value("blend_seed", cfg.trigger.blend_seed);
            cfg.trigger.warp_strength = p.value("warp_strength", cfg.trigger.warp_strength);
            cfg.trigger.warp_freq = p.value("warp_freq", cfg.trigger.warp_freq);
        }
        if (j.contains("augment")) {
            cfg.augment.clear();
            for (const auto& a : j.at("augment")) cfg.augment.push_back(augment_from_json(a));
        }
        if (j.contains("repair")) {
            const auto& r = j.at("repair");
            cfg.lambda = r.value("lambda", cfg.lambda);
            cfg.alpha = r.value("alpha", cfg.alpha);
            cfg.mode = repair_mode_from_name(r.value("mode", repair_mode_name(cfg.mode)));
            cfg.variant = stream_variant_from_name(r.value("variant", stream_variant_name(cfg.variant)));
        }
        cfg.clean_count = j.value("clean_count", cfg.clean_count);
        if (j.contains("detector")) cfg.poison_fraction = j.at("detector").value("poison_fraction", cfg.poison_fraction);
        if (j.contains("stream")) {
            const auto& s = j.at("stream");
            cfg.stream_length = s.value("length", cfg.stream_length);
            cfg.stream_seeds = s.value("seeds", cfg.stream_seeds);
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            cfg.sweep_direction_pairs = s.value("direction_pairs", cfg.sweep_direction_pairs);
            cfg.sweep_eval_count = s.value("eval_count", cfg.sweep_eval_count);
        }
        if (j.contains("ablation")) {
            const auto& a = j.at("ablation");
            cfg.ablation_clean_counts = a.value("clean_counts", cfg.ablation_clean_counts);
            cfg.ablation_position = a.value("position", cfg.ablation_position);
            cfg.ablation_seeds = a.value("seeds", cfg.ablation_seeds);
        }
        if (j.contains("bench")) cfg.bench_warmup = j.at("bench").value("warmup", cfg.bench_warmup);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    } catch (const ParamError& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }

    // numeric range validation
    if (cfg.width <= 0 || cfg.height <= 0 || cfg.channels <= 0 || cfg.classes <= 1)
        throw ConfigError("data dimensions out of range");
    if (cfg.train_count < 1 || cfg.test_count < 1) throw ConfigError("split sizes must be >= 1");
    if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (cfg.learning_rate <= 0.0 || cfg.momentum < 0.0 || cfg.momentum >= 1.0)
        throw ConfigError("bad optimizer settings");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.poison_ratio <= 0.0 || cfg.poison_ratio > 1.0) throw ConfigError("poison ratio must be in (0,1]");
    if (cfg.target_label < 0 || cfg.target_label >= cfg.classes) throw ConfigError("target label out of range");
    if (cfg.lambda < 0.0 || cfg.lambda > 1.0) throw ConfigError("lambda must be in [0,1]");
    if (cfg.clean_count < 1) throw ConfigError("clean_count must be >= 1");
    if (cfg.poison_fraction < 0.0 || cfg.poison_fraction > 1.0) throw ConfigError("poison_fraction must be in [0,1]");
    if (cfg.stream_length < 1) throw ConfigError("stream length must be >= 1");
    if (cfg.stream_seeds.empty()) throw ConfigError("need at least one stream seed");
    if (cfg.taps.empty()) throw ConfigError("need at least one tap");
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override must look like key.path=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    nlohmann::json* node = &j;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError("empty path segment in override: " + assignment);
        parts.push_back(part);
    }
    if (parts.empty()) throw ConfigError("empty override path: " + assignment);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];

    nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;  // plain string
    (*node)[parts.back()] = parsed;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    const std::uint64_t h = fnv1a64(dump.data(), dump.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RepairConfig repair_config_of(const ExperimentConfig& cfg) {
    RepairConfig r;
    r.lambda = cfg.lambda;
    r.alpha = cfg.alpha;
    r.mode = cfg.mode;
    r.variant = cfg.variant;
    r.taps = cfg.taps;
    return r;
}

SynthConfig synth_config_of(const ExperimentConfig& cfg) {
    SynthConfig s;
    s.width = cfg.width;
    s.height = cfg.height;
    s.channels = cfg.channels;
    s.num_classes = cfg.classes;
    s.train_count = cfg.train_count;
    s.test_count = cfg.test_count;
    s.seed = derive_seed(cfg.seed, "data");
    return s;
}

TrainConfig train_config_of(const ExperimentConfig& cfg) {
    TrainConfig t;
    t.epochs = cfg.epochs;
    t.learning_rate = cfg.learning_rate;
    t.momentum = cfg.momentum;
    t.batch_size = cfg.batch_size;
    t.seed = derive_seed(cfg.seed, "train");
    return t;
}

}  // namespace fire
