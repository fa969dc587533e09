#include "fire/trigger.hpp"

#include <algorithm>
#include <cmath>

#include "fire/errors.hpp"
#include "fire/rng.hpp"

namespace fire {

std::string trigger_kind_name(TriggerKind k) {
    switch (k) {
        case TriggerKind::Patch: return "patch";
        case TriggerKind::Blended: return "blended";
        case TriggerKind::Warp: return "warp";
    }
    return "?";
}

TriggerKind trigger_kind_from_name(const std::string& name) {
    if (name == "patch") return TriggerKind::Patch;
    if (name == "blended") return TriggerKind::Blended;
    if (name == "warp") return TriggerKind::Warp;
    throw ParamError("unknown trigger kind: " + name);
}

TriggerOp make_patch_trigger(int image_w, int image_h, int channels, int size) {
    // checker of complementary hue cells (2px blocks); sits in the
    // bottom-right corner with a 1px margin from the frame
    Tensor values = Tensor::zeros({channels, size, size});
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const bool cell = ((y / 2) + (x / 2)) % 2 == 0;
                values.at(c, y, x) = ((c % 2 == 0) == cell) ? 0.85f : 0.15f;
            }
    const int margin = 1;
    return make_patch_trigger_at(std::max(0, image_w - size - margin), std::max(0, image_h - size - margin),
                                 std::move(values));
}

TriggerOp make_patch_trigger_at(int x, int y, Tensor values) {
    if (values.shape.size() != 3) throw TriggerError("patch values must be {C,h,w}");
    TriggerOp t;
    t.kind = TriggerKind::Patch;
    t.patch_x = x;
    t.patch_y = y;
    t.patch_values = std::move(values);
    return t;
}

TriggerOp make_blended_trigger(int image_w, int image_h, int channels, double ratio, std::uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0) throw TriggerError("blend ratio must be in (0,1)");
    TriggerOp t;
    t.kind = TriggerKind::Blended;
    t.blend_ratio = ratio;
    t.blend_image = Tensor::zeros({channels, image_h, image_w});
    // smooth picture-like pattern: a few random low-frequency waves per channel
    Rng rng(derive_seed(seed, "blend-pattern"));
    const double pi2 = 2.0 * 3.14159265358979323846;
    for (int c = 0; c < channels; ++c) {
        const double fx1 = rng.uniform(0.5, 2.5), fy1 = rng.uniform(0.5, 2.5), p1 = rng.uniform(0.0, pi2);
        const double fx2 = rng.uniform(0.5, 3.5), fy2 = rng.uniform(0.5, 3.5), p2 = rng.uniform(0.0, pi2);
        for (int y = 0; y < image_h; ++y)
            for (int x = 0; x < image_w; ++x) {
                const double v = 0.5 + 0.30 * std::sin(pi2 * (fx1 * x / image_w + fy1 * y / image_h) + p1) +
                                 0.20 * std::sin(pi2 * (fx2 * x / image_w + fy2 * y / image_h) + p2);
                t.blend_image.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
    }
    return t;
}

TriggerOp make_warp_trigger(double strength, double freq) {
    TriggerOp t;
    t.kind = TriggerKind::Warp;
    t.warp_strength = strength;
    t.warp_freq = freq;
    return t;
}

namespace {

float sample_bilinear(const Tensor& img, int c, double sy, double sx) {
    const int h = img.height(), w = img.width();
    sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
    sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int x0 = static_cast<int>(std::floor(sx));
    const int y1 = std::min(y0 + 1, h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const double fy = sy - y0;
    const double fx = sx - x0;
    const double v = (1.0 - fy) * ((1.0 - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1)) +
                     fy * ((1.0 - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1));
    return static_cast<float>(v);
}

Tensor apply_patch(const TriggerOp& t, const Tensor& x) {
    const auto& p = t.patch_values;
    if (p.shape[0] != x.shape[0]) throw TriggerError("patch channel count does not match image");
    if (t.patch_x < 0 || t.patch_y < 0 || t.patch_x + p.width() > x.width() || t.patch_y + p.height() > x.height())
        throw TriggerError("patch does not fit inside image");
    Tensor out = x;
    for (int c = 0; c < p.shape[0]; ++c)
        for (int y = 0; y < p.height(); ++y)
            for (int px = 0; px < p.width(); ++px)
                out.at(c, t.patch_y + y, t.patch_x + px) = std::clamp(p.at(c, y, px), 0.0f, 1.0f);
    return out;
}

Tensor apply_blend(const TriggerOp& t, const Tensor& x) {
    if (!same_shape(t.blend_image, x)) throw TriggerError("blend image shape does not match input");
    Tensor out = x;
    const float r = static_cast<float>(t.blend_ratio);
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] = std::clamp((1.0f - r) * x.data[i] + r * t.blend_image.data[i], 0.0f, 1.0f);
    return out;
}

Tensor apply_warp(const TriggerOp& t, const Tensor& x) {
    const int h = x.height(), w = x.width();
    Tensor out = x;
    const double two_pi = 2.0 * 3.14159265358979323846;
    const double cy = 0.5 * (h - 1), cx = 0.5 * (w - 1);
    for (int y = 0; y < h; ++y) {
        for (int px = 0; px < w; ++px) {
            // smooth crossed field (horizontal shift varies with row, vertical
            // with column), ramped up toward the border so the image center
            // stays close to identity
            const double r = std::max(std::abs(y - cy) / (0.5 * h), std::abs(px - cx) / (0.5 * w));
            const double envelope = std::clamp((r - 0.5) / (0.9 - 0.5), 0.0, 1.0);
            const double dx = t.warp_strength * envelope * std::sin(two_pi * t.warp_freq * y / h + t.warp_phase_x);
            const double dy = t.warp_strength * envelope * std::sin(two_pi * t.warp_freq * px / w + t.warp_phase_y);
            for (int c = 0; c < x.shape[0]; ++c)
                out.at(c, y, px) = std::clamp(sample_bilinear(x, c, y + dy, px + dx), 0.0f, 1.0f);
        }
    }
    return out;
}

}  // namespace

Tensor apply_trigger(const TriggerOp& t, const Tensor& x) {
    if (x.shape.size() != 3) throw TriggerError("trigger expects {C,H,W} input, got " + shape_str(x.shape));
    switch (t.kind) {
        case TriggerKind::Patch: return apply_patch(t, x);
        case TriggerKind::Blended: return apply_blend(t, x);
        case TriggerKind::Warp: return apply_warp(t, x);
    }
    throw TriggerError("unreachable trigger kind");
}

PoisonResult poison_dataset(const Dataset& data, const PoisonPlan& plan, std::uint64_t seed) {
    if (data.size() == 0) throw ParamError("poison_dataset: empty dataset");
    if (plan.poison_ratio <= 0.0 || plan.poison_ratio > 1.0) throw ParamError("poison_ratio must be in (0,1]");
    if (plan.target_label < 0 || plan.target_label >= data.num_classes)
        throw ParamError("target_label out of range");

    const std::size_t n_poison =
        std::min(data.size(), static_cast<std::size_t>(std::llround(plan.poison_ratio * static_cast<double>(data.size()))));

    std::vector<int> indices(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) indices[i] = static_cast<int>(i);
    Rng rng(derive_seed(seed, "poison-select"));
    rng.shuffle(indices);
    indices.resize(n_poison);
    std::sort(indices.begin(), indices.end());

    PoisonResult result;
    result.data = data;
    result.poisoned_indices = indices;
    for (int idx : indices) {
        result.data.images[idx] = apply_trigger(plan.trigger, data.images[idx]);
        result.data.labels[idx] = static_cast<std::uint16_t>(plan.target_label);
    }
    return result;
}

std::vector<PairedSample> make_paired_set(const Dataset& clean, const TriggerOp& t) {
    std::vector<PairedSample> pairs;
    pairs.reserve(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        PairedSample p;
        p.clean = clean.images[i];
        p.pois = apply_trigger(t, clean.images[i]);
        p.label = clean.labels.empty() ? -1 : clean.labels[i];
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace fire
