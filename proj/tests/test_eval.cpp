#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fire/errors.hpp"
#include "fire/metrics.hpp"
#include "fire/rng.hpp"
#include "test_helpers.hpp"

using namespace fire;

namespace {

// two-class model that predicts by the sign of the first pixel
LayeredModel sign_model() {
    LayeredModel m;
    m.input_shape = {1, 1, 2};
    m.num_classes = 2;
    m.layers.push_back(flatten_layer());
    m.layers.push_back(dense_layer(2, 2));
    m.layers[1].weight.data = {1.0f, 0.0f, -1.0f, 0.0f};
    m.taps = {1};
    validate_model(m);
    return m;
}

Dataset labeled_set(const std::vector<float>& firsts, const std::vector<std::uint16_t>& labels) {
    Dataset d;
    d.width = 2;
    d.height = 1;
    d.channels = 1;
    d.num_classes = 2;
    for (std::size_t i = 0; i < firsts.size(); ++i) {
        d.images.push_back(Tensor({1, 1, 2}, {firsts[i], 0.0f}));
        d.labels.push_back(labels[i]);
    }
    return d;
}

}  // namespace

TEST_CASE("all-correct predictions give CA=PA=1, ASR=0") {
    const LayeredModel m = sign_model();
    const Dataset clean = labeled_set({0.9f, -0.9f, 0.8f}, {0, 1, 0});
    const Metrics metrics = compute_metrics(m, clean, clean, 1);
    CHECK(metrics.clean_accuracy == doctest::Approx(1.0));
    CHECK(metrics.poisoned_accuracy == doctest::Approx(1.0));
    CHECK(metrics.attack_success_rate == doctest::Approx(0.0));
}

TEST_CASE("all-target predictions give ASR=1 and PA equal to the target share") {
    const LayeredModel m = sign_model();
    // every poisoned sample predicted class 0 (positive first pixel)
    const Dataset pois = labeled_set({0.9f, 0.8f, 0.7f, 0.6f}, {0, 1, 1, 1});
    const Dataset clean = labeled_set({0.9f, -0.9f}, {0, 1});
    const Metrics metrics = compute_metrics(m, clean, pois, 0);
    CHECK(metrics.attack_success_rate == doctest::Approx(1.0));
    CHECK(metrics.poisoned_accuracy == doctest::Approx(0.25));
}

TEST_CASE("metrics match a per-sample counting oracle") {
    auto m = testutil::tiny_conv_model(5);
    Dataset clean, pois;
    clean.width = pois.width = 6;
    clean.height = pois.height = 6;
    clean.channels = pois.channels = 1;
    clean.num_classes = pois.num_classes = 3;
    Rng rng(6);
    for (int i = 0; i < 60; ++i) {
        clean.images.push_back(testutil::random_tensor({1, 6, 6}, rng));
        clean.labels.push_back(static_cast<std::uint16_t>(i % 3));
        pois.images.push_back(testutil::random_tensor({1, 6, 6}, rng));
        pois.labels.push_back(static_cast<std::uint16_t>((i + 1) % 3));
    }
    const int target = 2;
    const Metrics metrics = compute_metrics(m, clean, pois, target);

    std::size_t ca = 0, pa = 0, asr_n = 0, asr_hit = 0;
    for (std::size_t i = 0; i < clean.size(); ++i)
        if (forward(m, clean.images[i]).label == clean.labels[i]) ++ca;
    for (std::size_t i = 0; i < pois.size(); ++i) {
        const int pred = forward(m, pois.images[i]).label;
        if (pred == pois.labels[i]) ++pa;
        if (pois.labels[i] != target) {
            ++asr_n;
            if (pred == target) ++asr_hit;
        }
    }
    CHECK(metrics.clean_accuracy == doctest::Approx(static_cast<double>(ca) / clean.size()));
    CHECK(metrics.poisoned_accuracy == doctest::Approx(static_cast<double>(pa) / pois.size()));
    CHECK(metrics.attack_success_rate == doctest::Approx(static_cast<double>(asr_hit) / asr_n));
    CHECK_THROWS_AS((void)compute_metrics(m, Dataset{}, pois, target), ParamError);
}

TEST_CASE("ASR and PA are complementary when truth never equals the target") {
    auto m = testutil::tiny_conv_model(7);
    Dataset clean, pois;
    clean.width = pois.width = 6;
    clean.height = pois.height = 6;
    clean.channels = pois.channels = 1;
    clean.num_classes = pois.num_classes = 3;
    Rng rng(8);
    for (int i = 0; i < 40; ++i) {
        clean.images.push_back(testutil::random_tensor({1, 6, 6}, rng));
        clean.labels.push_back(static_cast<std::uint16_t>(1 + i % 2));  // never class 0
        pois.images.push_back(testutil::random_tensor({1, 6, 6}, rng));
        pois.labels.push_back(static_cast<std::uint16_t>(1 + i % 2));
    }
    const Metrics metrics = compute_metrics(m, clean, pois, 0);
    CHECK(metrics.attack_success_rate + metrics.poisoned_accuracy <= 1.0 + 1e-9);
}

namespace {

std::vector<StreamEntry> entry_pool(int n, bool poisoned, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<StreamEntry> pool;
    for (int i = 0; i < n; ++i) {
        StreamEntry e;
        e.x = testutil::random_tensor({1, 6, 6}, rng);
        e.true_label = i % 3;
        e.poisoned = poisoned;
        pool.push_back(std::move(e));
    }
    return pool;
}

}  // namespace

TEST_CASE("make_stream with fraction 1.0 is all poisoned") {
    const auto pois = entry_pool(50, true, 1);
    const auto stream = make_stream(pois, {}, DetectorSpec{1.0, 3}, 40);
    REQUIRE(stream.size() == 40);
    for (const auto& e : stream) CHECK(e.poisoned);
}

TEST_CASE("make_stream hits the exact rounded poisoned count") {
    const auto pois = entry_pool(120, true, 2);
    const auto clean = entry_pool(120, false, 3);
    const auto stream = make_stream(pois, clean, DetectorSpec{0.8, 7}, 100);
    int poisoned = 0;
    for (const auto& e : stream) poisoned += e.poisoned ? 1 : 0;
    CHECK(poisoned == 80);

    const auto stream90 = make_stream(pois, clean, DetectorSpec{0.9, 7}, 100);
    poisoned = 0;
    for (const auto& e : stream90) poisoned += e.poisoned ? 1 : 0;
    CHECK(poisoned == 90);
}

TEST_CASE("make_stream is deterministic per seed and fails on small pools") {
    const auto pois = entry_pool(60, true, 4);
    const auto clean = entry_pool(60, false, 5);
    const auto a = make_stream(pois, clean, DetectorSpec{0.5, 11}, 60);
    const auto b = make_stream(pois, clean, DetectorSpec{0.5, 11}, 60);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].poisoned == b[i].poisoned);
        CHECK(a[i].true_label == b[i].true_label);
        CHECK(max_abs_diff(a[i].x, b[i].x) == 0.0);
    }
    CHECK_THROWS_AS((void)make_stream(pois, clean, DetectorSpec{1.0, 1}, 61), ParamError);
    CHECK_THROWS_AS((void)make_stream(pois, {}, DetectorSpec{0.5, 1}, 10), ParamError);
}

TEST_CASE("windowed PA counts only poisoned entries in range") {
    StreamReport rep;
    for (int i = 0; i < 10; ++i) {
        StreamRecord rec;
        rec.index = i;
        rec.poisoned = i % 2 == 0;
        rec.true_label = 1;
        rec.final_label = i < 6 ? 1 : 0;
        rep.records.push_back(rec);
    }
    // positions 1..6: poisoned at 1,3,5 -> all correct
    CHECK(windowed_pa(rep, 1, 6) == doctest::Approx(1.0));
    // positions 7..10: poisoned at 7,9 -> all wrong
    CHECK(windowed_pa(rep, 7, 10) == doctest::Approx(0.0));
}

TEST_CASE("stream metrics recompute from the report") {
    auto m = testutil::tiny_conv_model(9);
    std::vector<Tensor> clean_init;
    Rng rng(10);
    for (int i = 0; i < 8; ++i) clean_init.push_back(testutil::random_tensor({1, 6, 6}, rng));
    auto stream = entry_pool(20, true, 11);
    RepairConfig cfg;
    cfg.taps = m.taps;
    DirectionState st = make_direction_state(m, cfg.taps);
    init_clean_centroids(st, m, clean_init);
    const StreamReport rep = run_stream(m, st, stream, cfg, default_augment_chain(), 12, 0);

    const Metrics metrics = compute_metrics(rep);
    CHECK(metrics.poisoned_accuracy == doctest::Approx(rep.poisoned_accuracy));
    CHECK(metrics.attack_success_rate == doctest::Approx(rep.attack_success_rate));
    CHECK(metrics.pa_curve.size() == rep.records.size());
    for (double v : metrics.pa_curve) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("ablation validates clean counts against the pool") {
    auto m = testutil::tiny_conv_model(13);
    AblationSetup setup;
    setup.model = &m;
    Rng rng(14);
    for (int i = 0; i < 20; ++i) setup.clean_pool.push_back(testutil::random_tensor({1, 6, 6}, rng));
    setup.poisoned_pool = entry_pool(30, true, 15);
    setup.repair.taps = m.taps;
    setup.augment = default_augment_chain();
    setup.position = 5;
    setup.num_seeds = 4;
    CHECK_THROWS_AS((void)clean_count_ablation(setup, {25}), ParamError);
    CHECK_THROWS_AS((void)clean_count_ablation(setup, {0}), ParamError);

    const auto points = clean_count_ablation(setup, {2, 10});
    REQUIRE(points.size() == 2);
    for (const auto& p : points) {
        CHECK(p.pa_at_position >= 0.0);
        CHECK(p.pa_at_position <= 1.0);
    }
}

TEST_CASE("bench reports the two phases separately") {
    auto m = testutil::tiny_conv_model(17);
    std::vector<Tensor> clean_init;
    Rng rng(18);
    for (int i = 0; i < 10; ++i) clean_init.push_back(testutil::random_tensor({1, 6, 6}, rng));
    const auto stream = entry_pool(40, true, 19);
    RepairConfig cfg;
    cfg.taps = m.taps;
    const BenchResult bench = bench_latency(m, cfg, default_augment_chain(), clean_init, stream, 21, 0, 5);
    CHECK(bench.init_us > 0.0);
    CHECK(bench.online_median_us > 0.0);
    CHECK(bench.online_p95_us >= bench.online_median_us);
    CHECK(bench.forward_median_us > 0.0);
    CHECK(bench.samples == 35);

    // empty stream: an init-phase figure only
    const BenchResult empty = bench_latency(m, cfg, default_augment_chain(), clean_init, {}, 21, 0, 0);
    CHECK(empty.init_us > 0.0);
    CHECK(empty.samples == 0);
    CHECK(empty.online_median_us == 0.0);
}
