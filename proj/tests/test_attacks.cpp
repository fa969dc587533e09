#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fire/errors.hpp"
#include "fire/rng.hpp"
#include "fire/trigger.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace fire;

TEST_CASE("1x1 patch of value 1 on a 2x2 zero image") {
    const TriggerOp t = make_patch_trigger_at(0, 0, Tensor({1, 1, 1}, {1.0f}));
    const Tensor out = apply_trigger(t, Tensor::zeros({1, 2, 2}));
    int ones = 0;
    for (float v : out.data) ones += v == 1.0f ? 1 : 0;
    CHECK(ones == 1);
    CHECK(out.at(0, 0, 0) == 1.0f);
}

TEST_CASE("patch application is idempotent") {
    Rng rng(4);
    const Tensor x = testutil::random_tensor({3, 8, 8}, rng);
    const TriggerOp t = make_patch_trigger(8, 8, 3, 3);
    const Tensor once = apply_trigger(t, x);
    const Tensor twice = apply_trigger(t, once);
    CHECK(max_abs_diff(once, twice) == 0.0);
}

TEST_CASE("patch leaves the input untouched") {
    Rng rng(6);
    const Tensor x = testutil::random_tensor({3, 8, 8}, rng);
    const Tensor copy = x;
    (void)apply_trigger(make_patch_trigger(8, 8, 3, 3), x);
    CHECK(max_abs_diff(x, copy) == 0.0);
}

TEST_CASE("patch must fit inside the image") {
    const TriggerOp t = make_patch_trigger_at(7, 7, Tensor::zeros({1, 3, 3}));
    CHECK_THROWS_AS((void)apply_trigger(t, Tensor::zeros({1, 8, 8})), TriggerError);
}

TEST_CASE("blend with ratio zero is the identity") {
    Rng rng(8);
    const Tensor x = testutil::random_tensor({3, 6, 6}, rng);
    TriggerOp t;
    t.kind = TriggerKind::Blended;
    t.blend_ratio = 0.0;
    t.blend_image = testutil::random_tensor({3, 6, 6}, rng);
    const Tensor out = apply_trigger(t, x);
    CHECK(max_abs_diff(out, x) == 0.0);
}

TEST_CASE("blend algebra holds element-wise") {
    Rng rng(10);
    const Tensor x = testutil::random_tensor({3, 6, 6}, rng);
    const TriggerOp t = make_blended_trigger(6, 6, 3, 0.3, 99);
    const Tensor out = apply_trigger(t, x);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const float want = std::clamp(0.7f * x.data[i] + 0.3f * t.blend_image.data[i], 0.0f, 1.0f);
        CHECK(out.data[i] == doctest::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("blended factory rejects out-of-range ratios") {
    CHECK_THROWS_AS((void)make_blended_trigger(6, 6, 3, 0.0), TriggerError);
    CHECK_THROWS_AS((void)make_blended_trigger(6, 6, 3, 1.0), TriggerError);
}

TEST_CASE("warp with zero strength is the identity") {
    Rng rng(12);
    const Tensor x = testutil::random_tensor({3, 8, 8}, rng);
    const Tensor out = apply_trigger(make_warp_trigger(0.0, 1.5), x);
    CHECK(max_abs_diff(out, x) == 0.0);
}

TEST_CASE("warp matches the independent bilinear resampling oracle") {
    Rng rng(14);
    const Tensor x = testutil::random_tensor({3, 10, 10}, rng);
    const TriggerOp t = make_warp_trigger(2.0, 1.5);
    const Tensor out = apply_trigger(t, x);

    const int h = 10, w = 10;
    const double two_pi = 2.0 * 3.14159265358979323846;
    const double cy = 0.5 * (h - 1), cx = 0.5 * (w - 1);
    for (int y = 0; y < h; ++y)
        for (int px = 0; px < w; ++px) {
            const double r = std::max(std::abs(y - cy) / (0.5 * h), std::abs(px - cx) / (0.5 * w));
            double env = (r - 0.5) / (0.9 - 0.5);
            env = env < 0 ? 0 : (env > 1 ? 1 : env);
            const double dx = t.warp_strength * env * std::sin(two_pi * t.warp_freq * y / h);
            const double dy = t.warp_strength * env * std::sin(two_pi * t.warp_freq * px / w);
            for (int c = 0; c < 3; ++c) {
                double want = oracle::bilinear(x, c, y + dy, px + dx);
                want = want < 0 ? 0 : (want > 1 ? 1 : want);
                CHECK(std::abs(out.at(c, y, px) - want) < 1e-5);
            }
        }
}

TEST_CASE("all trigger kinds clamp to [0,1]") {
    Rng rng(16);
    for (int round = 0; round < 5; ++round) {
        const Tensor x = testutil::random_tensor({3, 12, 12}, rng);
        for (const TriggerOp& t : {make_patch_trigger(12, 12, 3, 4), make_blended_trigger(12, 12, 3, 0.4),
                                   make_warp_trigger(5.0, 2.0)}) {
            const Tensor out = apply_trigger(t, x);
            CHECK(same_shape(out, x));
            for (float v : out.data) {
                CHECK(v >= 0.0f);
                CHECK(v <= 1.0f);
            }
        }
    }
}

namespace {

Dataset small_dataset(int n, std::uint64_t seed) {
    Dataset d;
    d.width = 8;
    d.height = 8;
    d.channels = 3;
    d.num_classes = 4;
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        d.images.push_back(testutil::random_tensor({3, 8, 8}, rng));
        d.labels.push_back(static_cast<std::uint16_t>(i % 4));
    }
    return d;
}

}  // namespace

TEST_CASE("poison ratio 1.0 relabels and triggers every sample") {
    const Dataset d = small_dataset(40, 21);
    PoisonPlan plan{make_patch_trigger(8, 8, 3, 3), 2, 1.0};
    const PoisonResult r = poison_dataset(d, plan, 5);
    CHECK(r.poisoned_indices.size() == 40);
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(r.data.labels[i] == 2);
        CHECK(max_abs_diff(r.data.images[i], apply_trigger(plan.trigger, d.images[i])) == 0.0);
    }
}

TEST_CASE("poison ratio 0.1 of 1000 picks exactly 100, reproducibly") {
    const Dataset d = small_dataset(1000, 22);
    PoisonPlan plan{make_patch_trigger(8, 8, 3, 3), 0, 0.1};
    const PoisonResult a = poison_dataset(d, plan, 77);
    const PoisonResult b = poison_dataset(d, plan, 77);
    CHECK(a.poisoned_indices.size() == 100);
    CHECK(a.poisoned_indices == b.poisoned_indices);
    const PoisonResult c = poison_dataset(d, plan, 78);
    CHECK(a.poisoned_indices != c.poisoned_indices);
}

TEST_CASE("poisoned images differ exactly where the trigger acts") {
    const Dataset d = small_dataset(60, 23);
    PoisonPlan plan{make_patch_trigger(8, 8, 3, 3), 1, 0.25};
    const PoisonResult r = poison_dataset(d, plan, 9);
    std::size_t k = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const bool poisoned = k < r.poisoned_indices.size() && r.poisoned_indices[k] == static_cast<int>(i);
        if (poisoned) {
            CHECK(max_abs_diff(r.data.images[i], apply_trigger(plan.trigger, d.images[i])) == 0.0);
            ++k;
        } else {
            CHECK(max_abs_diff(r.data.images[i], d.images[i]) == 0.0);
            CHECK(r.data.labels[i] == d.labels[i]);
        }
    }
    CHECK(k == r.poisoned_indices.size());
}

TEST_CASE("poison_dataset rejects empty input and bad plans") {
    Dataset empty;
    PoisonPlan plan{make_patch_trigger(8, 8, 3, 3), 0, 0.5};
    CHECK_THROWS_AS((void)poison_dataset(empty, plan, 1), ParamError);
    const Dataset d = small_dataset(10, 24);
    plan.poison_ratio = 0.0;
    CHECK_THROWS_AS((void)poison_dataset(d, plan, 1), ParamError);
    plan.poison_ratio = 0.5;
    plan.target_label = 7;
    CHECK_THROWS_AS((void)poison_dataset(d, plan, 1), ParamError);
}

TEST_CASE("make_paired_set pairs align by index") {
    const Dataset d = small_dataset(100, 25);
    const TriggerOp t = make_blended_trigger(8, 8, 3, 0.2);
    const auto pairs = make_paired_set(d, t);
    REQUIRE(pairs.size() == 100);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(max_abs_diff(pairs[i].clean, d.images[i]) == 0.0);
        CHECK(max_abs_diff(pairs[i].pois, apply_trigger(t, d.images[i])) == 0.0);
        CHECK(pairs[i].label == d.labels[i]);
    }
}

TEST_CASE("make_paired_set of an empty set is empty") {
    Dataset d;
    d.width = 8;
    d.height = 8;
    d.channels = 3;
    d.num_classes = 4;
    CHECK(make_paired_set(d, make_patch_trigger(8, 8, 3, 3)).empty());
}
