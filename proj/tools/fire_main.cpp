#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fire/checkpoint.hpp"
#include "fire/config.hpp"
#include "fire/desk.hpp"
#include "fire/direction.hpp"
#include "fire/errors.hpp"
#include "fire/metrics.hpp"
#include "fire/report.hpp"
#include "fire/repair.hpp"
#include "fire/rng.hpp"

namespace fs = std::filesystem;
using namespace fire;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;

struct CliArgs {
    std::string config_path;
    std::vector<std::string> overrides;
};

ExperimentConfig resolve_config(const CliArgs& args) {
    nlohmann::json j = nlohmann::json::object();
    if (!args.config_path.empty()) {
        std::ifstream is(args.config_path);
        if (!is) throw IoError("cannot open config file: " + args.config_path);
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("cannot parse config: ") + e.what());
        }
    }
    for (const auto& ov : args.overrides) apply_override(j, ov);
    ExperimentConfig cfg = config_from_json(j);
    if (const char* out = std::getenv("FIRE_OUT_DIR")) cfg.out_dir = out;
    return cfg;
}

RunStamp make_stamp(const ExperimentConfig& cfg) { return {config_hash_hex(cfg), cfg.seed, kToolVersion}; }

fs::path out_path(const ExperimentConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return fs::path(cfg.out_dir) / name;
}

// Pools for streaming: the first clean_count test images are the clean
// reference set; the rest feed the poisoned/clean stream pools.
struct StreamPools {
    std::vector<Tensor> clean_init;
    std::vector<StreamEntry> poisoned;
    std::vector<StreamEntry> clean;
};

StreamPools build_pools(const ExperimentConfig& cfg, const DataBundle& data, const TriggerOp& trigger) {
    if (static_cast<std::size_t>(cfg.clean_count) >= data.test.size())
        throw ConfigError("clean_count must be smaller than the test split");
    StreamPools pools;
    for (int i = 0; i < cfg.clean_count; ++i) pools.clean_init.push_back(data.test.images[i]);
    for (std::size_t i = cfg.clean_count; i < data.test.size(); ++i) {
        pools.poisoned.push_back({apply_trigger(trigger, data.test.images[i]), data.test.labels[i], true});
        pools.clean.push_back({data.test.images[i], data.test.labels[i], false});
    }
    return pools;
}

int cmd_gen_data(const ExperimentConfig& cfg) {
    const DataBundle bundle = make_synthetic_data(synth_config_of(cfg));
    const auto path = out_path(cfg, cfg.dataset_path);
    save_dataset(bundle, path.string());
    nlohmann::json summary{{"stamp", stamp_json(make_stamp(cfg))},
                           {"dataset", path.string()},
                           {"digest", dataset_digest(bundle)},
                           {"train_count", bundle.train.size()},
                           {"test_count", bundle.test.size()}};
    write_json_file(out_path(cfg, "gen_data.json").string(), summary);
    std::cout << "dataset " << path.string() << " digest=" << std::hex << dataset_digest(bundle) << std::dec << "\n";
    return 0;
}

DataBundle load_or_fail(const ExperimentConfig& cfg) {
    const auto path = fs::path(cfg.out_dir) / cfg.dataset_path;
    return load_dataset(path.string());
}

int cmd_train(const ExperimentConfig& cfg) {
    const DataBundle data = load_or_fail(cfg);
    const TriggerOp trigger = materialize_trigger(cfg.trigger, data.train.width, data.train.height,
                                                  data.train.channels);
    PoisonPlan plan{trigger, cfg.target_label, cfg.poison_ratio};
    PoisonResult poisoned = poison_dataset(data.train, plan, derive_seed(cfg.seed, "poison"));

    LayeredModel model = make_desk_model(data.train.width, data.train.height, data.train.channels,
                                         data.train.num_classes);
    model.taps = cfg.taps;
    validate_model(model);
    const TrainConfig tc = train_config_of(cfg);
    init_params(model, tc.seed);
    const TrainResult log = train(model, poisoned.data, tc);

    CheckpointMeta meta{cfg.seed, cfg.epochs, dataset_digest(data)};
    const auto ckpt = out_path(cfg, cfg.checkpoint_path);
    save_checkpoint(model, meta, ckpt.string());

    const Dataset pois_test = poisoned_eval_set(data.test, trigger);
    const Metrics m = compute_metrics(model, data.test, pois_test, cfg.target_label);
    nlohmann::json summary{{"stamp", stamp_json(make_stamp(cfg))},
                           {"checkpoint", ckpt.string()},
                           {"epochs", cfg.epochs},
                           {"ca", m.clean_accuracy},
                           {"asr", m.attack_success_rate},
                           {"pa", m.poisoned_accuracy},
                           {"epoch_loss", log.epoch_loss},
                           {"model_digest", model_digest(model)}};
    write_json_file(out_path(cfg, "train_report.json").string(), summary);
    std::cout << "epochs=" << cfg.epochs << " ca=" << m.clean_accuracy << " asr=" << m.attack_success_rate
              << " pa=" << m.poisoned_accuracy << "\n";
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
    const DataBundle data = load_or_fail(cfg);
    const LayeredModel model = load_checkpoint((fs::path(cfg.out_dir) / cfg.checkpoint_path).string());
    const TriggerOp trigger = materialize_trigger(cfg.trigger, data.test.width, data.test.height,
                                                  data.test.channels);
    Dataset eval = data.test;
    const std::size_t n = std::min<std::size_t>(eval.size(), static_cast<std::size_t>(cfg.sweep_eval_count));
    eval.images.resize(n);
    eval.labels.resize(n);
    const auto pairs = make_paired_set(eval, trigger);
    const SweepResult sweep = layer_sweep(model, pairs, cfg.taps, repair_config_of(cfg), cfg.sweep_direction_pairs);

    write_sweep_csv(out_path(cfg, "sweep.csv").string(), sweep, make_stamp(cfg));
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : sweep.rows) rows.push_back({{"tap", row.tap}, {"pa", row.poisoned_accuracy}});
    write_json_file(out_path(cfg, "sweep.json").string(),
                    {{"stamp", stamp_json(make_stamp(cfg))}, {"rows", rows}, {"best_tap", sweep.best_tap}});
    for (const auto& row : sweep.rows)
        std::cout << "tap " << row.tap << " pa=" << row.poisoned_accuracy
                  << (row.tap == sweep.best_tap ? "  <- best" : "") << "\n";
    return 0;
}

int cmd_stream(const ExperimentConfig& cfg) {
    const DataBundle data = load_or_fail(cfg);
    const LayeredModel model = load_checkpoint((fs::path(cfg.out_dir) / cfg.checkpoint_path).string());
    const TriggerOp trigger = materialize_trigger(cfg.trigger, data.test.width, data.test.height,
                                                  data.test.channels);
    const StreamPools pools = build_pools(cfg, data, trigger);
    const RepairConfig rc = repair_config_of(cfg);

    std::vector<StreamReport> reports;
    for (std::uint64_t stream_seed : cfg.stream_seeds) {
        DetectorSpec det{cfg.poison_fraction, derive_seed(derive_seed(cfg.seed, "stream"), stream_seed)};
        const auto stream = make_stream(pools.poisoned, pools.clean, det, cfg.stream_length);

        DirectionState state = make_direction_state(model, rc.taps);
        const auto t0 = std::chrono::steady_clock::now();
        if (rc.variant != StreamVariant::AugmentOnly) init_clean_centroids(state, model, pools.clean_init);
        const double init_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();

        StreamReport report = run_stream(model, state, stream, rc, cfg.augment,
                                         derive_seed(derive_seed(cfg.seed, "augment"), stream_seed),
                                         cfg.target_label);
        report.timing.init_us = init_us;

        const std::string tag = "stream_" + std::to_string(stream_seed);
        write_stream_jsonl(out_path(cfg, tag + ".jsonl").string(), report);
        RunStamp stamp = make_stamp(cfg);
        stamp.seed = stream_seed;
        write_json_file(out_path(cfg, tag + "_summary.json").string(), stream_summary_json(report, stamp));
        save_direction_state(state, out_path(cfg, tag + "_state.bin").string());
        std::cout << "stream seed " << stream_seed << ": pa=" << report.poisoned_accuracy
                  << " asr=" << report.attack_success_rate << " exit_median_us=" << report.timing.online_median_us
                  << "\n";
        reports.push_back(std::move(report));
    }
    write_pa_curve_csv(out_path(cfg, "pa_curve.csv").string(), reports, make_stamp(cfg));
    return 0;
}

int cmd_bench(const ExperimentConfig& cfg) {
    const DataBundle data = load_or_fail(cfg);
    const LayeredModel model = load_checkpoint((fs::path(cfg.out_dir) / cfg.checkpoint_path).string());
    const TriggerOp trigger = materialize_trigger(cfg.trigger, data.test.width, data.test.height,
                                                  data.test.channels);
    const StreamPools pools = build_pools(cfg, data, trigger);

    DetectorSpec det{cfg.poison_fraction, derive_seed(cfg.seed, "bench-stream")};
    const auto stream = make_stream(pools.poisoned, pools.clean, det, cfg.stream_length);
    const BenchResult bench = bench_latency(model, repair_config_of(cfg), cfg.augment, pools.clean_init, stream,
                                            derive_seed(cfg.seed, "bench-aug"), cfg.target_label, cfg.bench_warmup);

    nlohmann::json summary{{"stamp", stamp_json(make_stamp(cfg))},
                           {"init_us", bench.init_us},
                           {"online_median_us", bench.online_median_us},
                           {"online_p95_us", bench.online_p95_us},
                           {"forward_median_us", bench.forward_median_us},
                           {"samples", bench.samples}};
    write_json_file(out_path(cfg, "bench.json").string(), summary);
    std::cout << "init_us=" << bench.init_us << " online_median_us=" << bench.online_median_us
              << " online_p95_us=" << bench.online_p95_us << " forward_median_us=" << bench.forward_median_us << "\n";
    return 0;
}

int cmd_ablate_clean(const ExperimentConfig& cfg) {
    const DataBundle data = load_or_fail(cfg);
    const LayeredModel model = load_checkpoint((fs::path(cfg.out_dir) / cfg.checkpoint_path).string());
    const TriggerOp trigger = materialize_trigger(cfg.trigger, data.test.width, data.test.height,
                                                  data.test.channels);

    int max_nc = 0;
    for (int n : cfg.ablation_clean_counts) max_nc = std::max(max_nc, n);
    if (static_cast<std::size_t>(max_nc) >= data.test.size())
        throw ConfigError("ablation clean count exceeds the test split");

    AblationSetup setup;
    setup.model = &model;
    setup.clean_pool = balanced_clean_pool(data.test, max_nc);
    for (std::size_t i = max_nc; i < data.test.size(); ++i)
        setup.poisoned_pool.push_back({apply_trigger(trigger, data.test.images[i]), data.test.labels[i], true});
    setup.repair = repair_config_of(cfg);
    setup.augment = cfg.augment;
    setup.target_label = cfg.target_label;
    setup.position = cfg.ablation_position;
    setup.num_seeds = cfg.ablation_seeds;
    setup.seed = derive_seed(cfg.seed, "ablation");

    const auto points = clean_count_ablation(setup, cfg.ablation_clean_counts);
    write_ablation_csv(out_path(cfg, "ablation.csv").string(), points, cfg.ablation_position, make_stamp(cfg));
    for (const auto& p : points) std::cout << "n_clean=" << p.n_clean << " pa=" << p.pa_at_position << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fire: latent-direction runtime backdoor mitigation toolkit"};
    app.require_subcommand(1);

    CliArgs args;
    app.add_option("-c,--config", args.config_path, "experiment config JSON");
    app.add_option("--set", args.overrides, "dotted-path config override, e.g. repair.lambda=0.25");

    auto* gen = app.add_subcommand("gen-data", "generate the seeded synthetic dataset");
    auto* train_cmd = app.add_subcommand("train", "train the backdoored desk classifier");
    auto* sweep = app.add_subcommand("sweep", "per-tap repair study with paired directions");
    auto* stream = app.add_subcommand("stream", "run the streaming mitigation loop");
    auto* bench = app.add_subcommand("bench", "time the initialization and online phases");
    auto* ablate = app.add_subcommand("ablate-clean", "clean-sample-count ablation");

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg = resolve_config(args);
        if (gen->parsed()) return cmd_gen_data(cfg);
        if (train_cmd->parsed()) return cmd_train(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (stream->parsed()) return cmd_stream(cfg);
        if (bench->parsed()) return cmd_bench(cfg);
        if (ablate->parsed()) return cmd_ablate_clean(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParamError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
