#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fire/dataset.hpp"
#include "fire/errors.hpp"
#include "fire/model.hpp"
#include "fire/rng.hpp"
#include "fire/train.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace fire;

TEST_CASE("forward through an identity dense layer") {
    LayeredModel m;
    m.input_shape = {2};
    m.num_classes = 2;
    m.layers.push_back(dense_layer(2, 2));
    m.layers[0].weight.data = {1.0f, 0.0f, 0.0f, 1.0f};
    m.taps = {0};
    validate_model(m);

    const PredictionOutcome out = forward(m, Tensor({2}, {3.0f, 1.0f}));
    CHECK(out.logits.data[0] == doctest::Approx(3.0));
    CHECK(out.logits.data[1] == doctest::Approx(1.0));
    CHECK(out.label == 0);
}

TEST_CASE("all-zero input with zero biases gives label 0 by tie-break") {
    auto m = testutil::tiny_mlp();
    for (auto* t : param_tensors(m))
        if (t->shape.size() == 1)
            for (auto& v : t->data) v = 0.0f;
    const PredictionOutcome out = forward(m, Tensor::zeros({6}));
    for (float v : out.logits.data) CHECK(v == 0.0f);
    CHECK(out.label == 0);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
    CHECK(argmax(Tensor({3}, {1.0f, 1.0f, 1.0f})) == 0);
    CHECK(argmax(Tensor({4}, {0.0f, 2.0f, 2.0f, 1.0f})) == 1);
}

TEST_CASE("two-layer MLP forward matches a naive matmul oracle") {
    auto m = testutil::tiny_mlp(29);
    Rng rng(5);
    const Tensor x = testutil::random_tensor({6}, rng, -1.0, 1.0);

    // hand-rolled reference
    auto as_rows = [](const Tensor& w, int out_dim, int in_dim) {
        std::vector<std::vector<double>> rows(out_dim, std::vector<double>(in_dim));
        for (int o = 0; o < out_dim; ++o)
            for (int i = 0; i < in_dim; ++i) rows[o][i] = w.data[static_cast<std::size_t>(o) * in_dim + i];
        return rows;
    };
    std::vector<double> xv(x.data.begin(), x.data.end());
    auto h = oracle::dense(as_rows(m.layers[0].weight, 5, 6),
                           std::vector<double>(m.layers[0].bias.data.begin(), m.layers[0].bias.data.end()), xv);
    for (auto& v : h) v = v > 0 ? v : 0;
    auto logits = oracle::dense(as_rows(m.layers[2].weight, 3, 5),
                                std::vector<double>(m.layers[2].bias.data.begin(), m.layers[2].bias.data.end()), h);

    const PredictionOutcome out = forward(m, x);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(out.logits.data[i] - logits[i]) < 1e-5);
}

TEST_CASE("conv2d forward matches the direct convolution oracle") {
    auto m = testutil::tiny_conv_model(31);
    Rng rng(9);
    const Tensor x = testutil::random_tensor({1, 6, 6}, rng);
    const Tensor got = apply_layer(m.layers[0], x);
    const Tensor want = oracle::conv2d(x, m.layers[0].weight, m.layers[0].bias, 1, 0);
    CHECK(max_abs_diff(got, want) < 1e-5);
}

TEST_CASE("tap at the last layer equals full forward logits") {
    auto m = testutil::tiny_mlp(7);
    m.taps = {0, 2};
    Rng rng(13);
    const Tensor x = testutil::random_tensor({6}, rng);
    const Tensor latent = forward_to(m, x, 2);
    const PredictionOutcome out = forward(m, x);
    CHECK(max_abs_diff(latent, out.logits) == 0.0);
}

TEST_CASE("forward_to on a dense identity first layer is the input") {
    LayeredModel m;
    m.input_shape = {2};
    m.num_classes = 2;
    m.layers.push_back(dense_layer(2, 2));
    m.layers[0].weight.data = {1.0f, 0.0f, 0.0f, 1.0f};
    m.taps = {0};
    validate_model(m);
    const Tensor latent = forward_to(m, Tensor({2}, {1.0f, 2.0f}), 0);
    CHECK(latent.data[0] == 1.0f);
    CHECK(latent.data[1] == 2.0f);
}

TEST_CASE("composition identity: forward_from(forward_to(x)) == forward(x)") {
    for (auto seed : {1u, 2u, 3u}) {
        auto m = testutil::tiny_conv_model(seed);
        Rng rng(100 + seed);
        const Tensor x = testutil::random_tensor({1, 6, 6}, rng);
        const PredictionOutcome full = forward(m, x);
        for (int tap : m.taps) {
            const PredictionOutcome via = forward_from(m, forward_to(m, x, tap), tap);
            CHECK(max_abs_diff(via.logits, full.logits) < 1e-6);
            CHECK(via.label == full.label);
        }
    }
}

TEST_CASE("forward_with_taps returns the same latents as forward_to") {
    auto m = testutil::tiny_conv_model(41);
    Rng rng(15);
    const Tensor x = testutil::random_tensor({1, 6, 6}, rng);
    const ForwardTrace trace = forward_with_taps(m, x, m.taps);
    REQUIRE(trace.latents.size() == m.taps.size());
    for (std::size_t i = 0; i < m.taps.size(); ++i)
        CHECK(max_abs_diff(trace.latents[i], forward_to(m, x, m.taps[i])) == 0.0);
    CHECK(trace.label == forward(m, x).label);
}

TEST_CASE("forward family never mutates parameters") {
    auto m = testutil::tiny_conv_model(43);
    const std::uint64_t before = model_digest(m);
    Rng rng(17);
    const Tensor x = testutil::random_tensor({1, 6, 6}, rng);
    (void)forward(m, x);
    (void)forward_to(m, x, 0);
    (void)forward_from(m, forward_to(m, x, 4), 4);
    CHECK(model_digest(m) == before);
}

TEST_CASE("shape and tap errors") {
    auto m = testutil::tiny_mlp();
    CHECK_THROWS_AS((void)forward(m, Tensor::zeros({5})), ShapeError);
    CHECK_THROWS_AS((void)forward_to(m, Tensor::zeros({6}), 1), TapError);
    CHECK_THROWS_AS((void)forward_from(m, Tensor::zeros({4}), 2), ShapeError);
    m.taps = {2, 0};
    CHECK_THROWS_AS(validate_model(m), TapError);
}

TEST_CASE("gradient check: dense and conv match central finite differences") {
    auto m = testutil::tiny_conv_model(53);
    Rng rng(19);
    const Tensor x = testutil::random_tensor({1, 6, 6}, rng);
    const int label = 1;

    Gradients grads = make_gradients(m);
    (void)backward_sample(m, x, label, grads, 1.0);

    auto params = param_tensors(m);
    const double step = 1e-3;
    std::size_t checked = 0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p]->numel(); i += 2) {  // every other param keeps it quick
            const float saved = params[p]->data[i];
            params[p]->data[i] = static_cast<float>(saved + step);
            const double up = sample_loss(m, x, label);
            params[p]->data[i] = static_cast<float>(saved - step);
            const double down = sample_loss(m, x, label);
            params[p]->data[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = grads.tensors[p].data[i];
            CHECK(std::abs(analytic - numeric) <= 1e-3 * std::max({1.0, std::abs(numeric), std::abs(analytic)}));
            ++checked;
        }
    }
    CHECK(checked > 20);
}

TEST_CASE("training separates a linearly separable set") {
    Dataset data;
    data.width = 2;
    data.height = 1;
    data.channels = 1;
    data.num_classes = 2;
    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
        const int label = i % 2;
        const double cx = label == 0 ? 0.25 : 0.75;
        Tensor img = Tensor::zeros({1, 1, 2});
        img.data[0] = static_cast<float>(cx + rng.uniform(-0.15, 0.15));
        img.data[1] = static_cast<float>(1.0 - cx + rng.uniform(-0.15, 0.15));
        data.images.push_back(img);
        data.labels.push_back(static_cast<std::uint16_t>(label));
    }

    LayeredModel m;
    m.input_shape = {1, 1, 2};
    m.num_classes = 2;
    m.layers.push_back(flatten_layer());
    m.layers.push_back(dense_layer(2, 2));
    m.taps = {1};
    init_params(m, 7);

    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 0.1;
    cfg.seed = 7;
    const TrainResult log = train(m, data, cfg);
    CHECK(log.epoch_loss.size() == 50);
    CHECK(accuracy(m, data) >= 0.99);
}

TEST_CASE("epochs=0 leaves parameters at initialization") {
    auto m = testutil::tiny_conv_model(59);
    init_params(m, 99);
    const std::uint64_t before = model_digest(m);
    Dataset data;
    data.width = 6;
    data.height = 6;
    data.channels = 1;
    data.num_classes = 3;
    Rng rng(3);
    for (int i = 0; i < 8; ++i) {
        data.images.push_back(testutil::random_tensor({1, 6, 6}, rng));
        data.labels.push_back(static_cast<std::uint16_t>(i % 3));
    }
    TrainConfig cfg;
    cfg.epochs = 0;
    (void)train(m, data, cfg);
    CHECK(model_digest(m) == before);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
    Dataset data;
    data.width = 6;
    data.height = 6;
    data.channels = 1;
    data.num_classes = 3;
    Rng rng(12);
    for (int i = 0; i < 60; ++i) {
        data.images.push_back(testutil::random_tensor({1, 6, 6}, rng));
        data.labels.push_back(static_cast<std::uint16_t>(i % 3));
    }
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 21;

    auto m1 = testutil::tiny_conv_model(61);
    init_params(m1, cfg.seed);
    (void)train(m1, data, cfg);
    auto m2 = testutil::tiny_conv_model(61);
    init_params(m2, cfg.seed);
    (void)train(m2, data, cfg);
    CHECK(model_digest(m1) == model_digest(m2));
}

TEST_CASE("an absurd learning rate raises the divergence error") {
    Dataset data;
    data.width = 6;
    data.height = 6;
    data.channels = 1;
    data.num_classes = 3;
    Rng rng(33);
    for (int i = 0; i < 30; ++i) {
        data.images.push_back(testutil::random_tensor({1, 6, 6}, rng));
        data.labels.push_back(static_cast<std::uint16_t>(i % 3));
    }
    auto m = testutil::tiny_conv_model(73);
    init_params(m, 1);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.learning_rate = 1e4;
    cfg.momentum = 0.99;
    CHECK_THROWS_AS((void)train(m, data, cfg), DivergenceError);
}

TEST_CASE("train rejects empty datasets and bad labels") {
    auto m = testutil::tiny_conv_model(67);
    Dataset empty;
    TrainConfig cfg;
    CHECK_THROWS_AS((void)train(m, empty, cfg), ParamError);

    Dataset bad;
    bad.num_classes = 3;
    Rng rng(2);
    bad.images.push_back(testutil::random_tensor({1, 6, 6}, rng));
    bad.labels.push_back(9);
    CHECK_THROWS_AS((void)train(m, bad, cfg), ParamError);
}

TEST_CASE("latent values stay finite through the desk-sized stack") {
    auto m = testutil::tiny_conv_model(71);
    Rng rng(31);
    for (int i = 0; i < 10; ++i) {
        const Tensor x = testutil::random_tensor({1, 6, 6}, rng);
        CHECK(all_finite(forward(m, x).logits));
        for (int tap : m.taps) CHECK(all_finite(forward_to(m, x, tap)));
    }
}
