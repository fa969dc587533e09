#include "fire/direction.hpp"

#include <algorithm>

#include "fire/checkpoint.hpp"
#include "fire/errors.hpp"

namespace fire {

int DirectionState::tap_slot(int tap) const {
    for (std::size_t i = 0; i < taps.size(); ++i)
        if (taps[i] == tap) return static_cast<int>(i);
    throw TapError("tap " + std::to_string(tap) + " is not tracked by this state");
}

DirectionState make_direction_state(const LayeredModel& model, const std::vector<int>& taps) {
    DirectionState state;
    int prev = -1;
    for (int tap : taps) {
        if (tap <= prev) throw TapError("state taps must be strictly increasing");
        if (!model.has_tap(tap)) throw TapError("tap " + std::to_string(tap) + " is not a model tap");
        prev = tap;
        const auto shape = latent_shape(model, tap);
        const std::size_t n = Tensor::shape_numel(shape);
        TapStats stats;
        stats.clean_centroid.assign(n, 0.0);
        stats.pois_centroid.assign(n, 0.0);
        stats.pois_aug_centroid.assign(n, 0.0);
        stats.direction = Tensor::zeros(shape);
        state.taps.push_back(tap);
        state.latent_shapes.push_back(shape);
        state.stats.push_back(std::move(stats));
    }
    return state;
}

Tensor clean_centroid(const LayeredModel& model, const std::vector<Tensor>& clean_set, int tap) {
    if (clean_set.empty()) throw ParamError("clean_centroid: empty sample set");
    const auto shape = latent_shape(model, tap);
    std::vector<double> acc(Tensor::shape_numel(shape), 0.0);
    for (const auto& x : clean_set) {
        const Tensor latent = forward_to(model, x, tap);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += latent.data[i];
    }
    Tensor out = Tensor::zeros(shape);
    const double inv = 1.0 / static_cast<double>(clean_set.size());
    for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i] * inv);
    return out;
}

void init_clean_centroids(DirectionState& state, const LayeredModel& model, const std::vector<Tensor>& clean_set) {
    if (clean_set.empty()) throw ParamError("init_clean_centroids: empty sample set");
    for (std::size_t s = 0; s < state.taps.size(); ++s) {
        std::fill(state.stats[s].clean_centroid.begin(), state.stats[s].clean_centroid.end(), 0.0);
    }
    for (const auto& x : clean_set) {
        const ForwardTrace trace = forward_with_taps(model, x, state.taps);
        for (std::size_t s = 0; s < state.taps.size(); ++s) {
            auto& acc = state.stats[s].clean_centroid;
            const auto& latent = trace.latents[s];
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += latent.data[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(clean_set.size());
    for (auto& stats : state.stats) {
        for (auto& v : stats.clean_centroid) v *= inv;
        stats.clean_initialized = true;
    }
}

Displacement samplewise_displacement(const LayeredModel& model, const Tensor& x_clean, const Tensor& x_pois, int tap) {
    const Tensor a = forward_to(model, x_clean, tap);
    const Tensor b = forward_to(model, x_pois, tap);
    Displacement d;
    d.tap = tap;
    d.vector = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < a.numel(); ++i) d.vector.data[i] = b.data[i] - a.data[i];
    return d;
}

Tensor estimate_direction_paired(const LayeredModel& model, const std::vector<PairedSample>& pairs, int tap) {
    if (pairs.empty()) throw ParamError("estimate_direction_paired: no pairs");
    const auto shape = latent_shape(model, tap);
    std::vector<double> acc(Tensor::shape_numel(shape), 0.0);
    for (const auto& p : pairs) {
        const Displacement d = samplewise_displacement(model, p.clean, p.pois, tap);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d.vector.data[i];
    }
    Tensor out = Tensor::zeros(shape);
    const double inv = 1.0 / static_cast<double>(pairs.size());
    for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i] * inv);
    return out;
}

namespace {

Tensor centroid_difference(const std::vector<double>& a, const std::vector<double>& b, const std::vector<int>& shape) {
    Tensor out = Tensor::zeros(shape);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = static_cast<float>(a[i] - b[i]);
    return out;
}

}  // namespace

Tensor centroid_diff_direction(const DirectionState& state, int tap) {
    const int s = state.tap_slot(tap);
    const auto& stats = state.stats[s];
    if (!stats.clean_initialized) throw StateError("clean centroid not initialized at tap " + std::to_string(tap));
    if (stats.count < 1) throw StateError("no stream samples incorporated at tap " + std::to_string(tap));
    return centroid_difference(stats.pois_centroid, stats.clean_centroid, state.latent_shapes[s]);
}

Tensor estimate_direction_augmentation(const DirectionState& state, int tap) {
    const int s = state.tap_slot(tap);
    const auto& stats = state.stats[s];
    if (stats.count < 1) throw StateError("no stream samples incorporated at tap " + std::to_string(tap));
    return centroid_difference(stats.pois_centroid, stats.pois_aug_centroid, state.latent_shapes[s]);
}

Tensor combine_directions(const Tensor& d_diff, const Tensor& d_aug, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw ParamError("lambda must be in [0,1]");
    if (!same_shape(d_diff, d_aug)) throw ShapeError("combine_directions: shape mismatch");
    Tensor out = Tensor::zeros(d_diff.shape);
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] = static_cast<float>(lambda * d_diff.data[i] + (1.0 - lambda) * d_aug.data[i]);
    return out;
}

void increment_count(DirectionState& state, int tap) { ++state.stats[state.tap_slot(tap)].count; }

void update_centroid(DirectionState& state, int tap, CentroidKind which, const Tensor& latent) {
    const int s = state.tap_slot(tap);
    auto& stats = state.stats[s];
    if (!same_shape(latent.shape, state.latent_shapes[s]))
        throw StateError("latent shape " + shape_str(latent.shape) + " does not match tap " + std::to_string(tap) +
                         " shape " + shape_str(state.latent_shapes[s]));
    if (stats.count < 1) throw StateError("update_centroid called before increment_count");
    auto& centroid = which == CentroidKind::Pois ? stats.pois_centroid : stats.pois_aug_centroid;
    const double inv = 1.0 / static_cast<double>(stats.count);
    for (std::size_t i = 0; i < centroid.size(); ++i)
        centroid[i] += (static_cast<double>(latent.data[i]) - centroid[i]) * inv;
}

Tensor centroid_as_tensor(const std::vector<double>& centroid, const std::vector<int>& shape) {
    Tensor out = Tensor::zeros(shape);
    for (std::size_t i = 0; i < centroid.size(); ++i) out.data[i] = static_cast<float>(centroid[i]);
    return out;
}

void save_direction_state(const DirectionState& state, const std::string& path) {
    nlohmann::json meta{{"kind", "direction_state"}, {"taps", state.taps}, {"latent_shapes", state.latent_shapes}};
    nlohmann::json per_tap = nlohmann::json::array();
    std::vector<float> payload;
    for (std::size_t s = 0; s < state.taps.size(); ++s) {
        const auto& stats = state.stats[s];
        per_tap.push_back({{"count", stats.count}, {"clean_initialized", stats.clean_initialized}});
        auto push = [&payload](const std::vector<double>& v) {
            for (double x : v) payload.push_back(static_cast<float>(x));
        };
        push(stats.clean_centroid);
        push(stats.pois_centroid);
        push(stats.pois_aug_centroid);
        payload.insert(payload.end(), stats.direction.data.begin(), stats.direction.data.end());
    }
    meta["tap_stats"] = per_tap;
    write_envelope(path, meta, payload);
}

DirectionState load_direction_state(const std::string& path) {
    auto [meta, payload] = read_envelope(path);
    if (meta.value("kind", "") != "direction_state") throw IoError("not a direction-state file: " + path);
    DirectionState state;
    state.taps = meta.at("taps").get<std::vector<int>>();
    state.latent_shapes = meta.at("latent_shapes").get<std::vector<std::vector<int>>>();
    const auto& per_tap = meta.at("tap_stats");
    std::size_t off = 0;
    auto take = [&](std::vector<double>& dst, std::size_t n) {
        dst.resize(n);
        for (std::size_t i = 0; i < n; ++i) dst[i] = payload.at(off++);
    };
    for (std::size_t s = 0; s < state.taps.size(); ++s) {
        TapStats stats;
        const std::size_t n = Tensor::shape_numel(state.latent_shapes[s]);
        stats.count = per_tap.at(s).at("count").get<std::int64_t>();
        stats.clean_initialized = per_tap.at(s).at("clean_initialized").get<bool>();
        take(stats.clean_centroid, n);
        take(stats.pois_centroid, n);
        take(stats.pois_aug_centroid, n);
        stats.direction = Tensor::zeros(state.latent_shapes[s]);
        for (std::size_t i = 0; i < n; ++i) stats.direction.data[i] = payload.at(off++);
        state.stats.push_back(std::move(stats));
    }
    return state;
}

}  // namespace fire
