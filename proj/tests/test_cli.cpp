#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "fire/checkpoint.hpp"
#include "fire/config.hpp"
#include "fire/report.hpp"
#include "fire/trigger.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_bin() {
    const char* bin = std::getenv("FIRE_CLI_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "FIRE_CLI_BIN must point at the fire binary");
    return bin;
}

int run_cli(const std::string& args) {
    const std::string cmd = cli_bin() + std::string(" ") + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

struct Workspace {
    fs::path dir;
    Workspace() : dir(fs::temp_directory_path() / ("fire_cli_test_" + std::to_string(::getpid()))) {
        fs::create_directories(dir);
        const nlohmann::json cfg{{"seed", 3},
                                 {"out_dir", (dir / "out").string()},
                                 {"data", {{"train_count", 400}, {"test_count", 160}}},
                                 {"train", {{"epochs", 1}}},
                                 {"stream", {{"length", 30}, {"seeds", {1, 2}}}},
                                 {"ablation", {{"clean_counts", {2, 5}}, {"position", 3}, {"seeds", 4}}},
                                 {"sweep", {{"eval_count", 60}, {"direction_pairs", 20}}}};
        std::ofstream os(dir / "cfg.json");
        os << cfg.dump(2);
    }
    ~Workspace() { fs::remove_all(dir); }

    std::string flag() const { return "-c " + (dir / "cfg.json").string(); }
    fs::path out(const std::string& name) const { return dir / "out" / name; }
};

}  // namespace

TEST_CASE("full pipeline runs and outputs are reproducible") {
    Workspace ws;
    REQUIRE(run_cli(ws.flag() + " gen-data") == 0);
    REQUIRE(fs::exists(ws.out("dataset.bin")));
    const auto gen1 = fire::read_json_file(ws.out("gen_data.json").string());

    REQUIRE(run_cli(ws.flag() + " gen-data") == 0);
    const auto gen2 = fire::read_json_file(ws.out("gen_data.json").string());
    CHECK(gen1.at("digest") == gen2.at("digest"));
    CHECK(gen1.at("stamp").at("config_hash") == gen2.at("stamp").at("config_hash"));

    REQUIRE(run_cli(ws.flag() + " train") == 0);
    const auto train1 = fire::read_json_file(ws.out("train_report.json").string());
    REQUIRE(run_cli(ws.flag() + " train") == 0);
    const auto train2 = fire::read_json_file(ws.out("train_report.json").string());
    CHECK(train1.at("model_digest") == train2.at("model_digest"));

    REQUIRE(run_cli(ws.flag() + " sweep") == 0);
    const auto sweep = fire::read_json_file(ws.out("sweep.json").string());
    CHECK(sweep.at("rows").size() == 3);  // default taps

    REQUIRE(run_cli(ws.flag() + " stream") == 0);
    REQUIRE(fs::exists(ws.out("stream_1.jsonl")));
    const auto summary = fire::read_json_file(ws.out("stream_1_summary.json").string());
    const auto lines = fire::read_jsonl(ws.out("stream_1.jsonl").string());
    REQUIRE(lines.size() == 30);
    std::size_t ok = 0, pois = 0;
    for (const auto& line : lines) {
        if (!line.value("poisoned", false)) continue;
        ++pois;
        if (line.at("final").get<int>() == line.at("true_label").get<int>()) ++ok;
    }
    CHECK(summary.at("pa").get<double>() ==
          doctest::Approx(pois ? static_cast<double>(ok) / pois : 0.0).epsilon(1e-9));

    REQUIRE(run_cli(ws.flag() + " bench") == 0);
    const auto bench = fire::read_json_file(ws.out("bench.json").string());
    CHECK(bench.at("init_us").get<double>() > 0.0);
    CHECK(bench.at("online_median_us").get<double>() > 0.0);

    REQUIRE(run_cli(ws.flag() + " ablate-clean") == 0);
    REQUIRE(fs::exists(ws.out("ablation.csv")));
}

TEST_CASE("epochs=0 checkpoints equal initialization and the seed") {
    Workspace ws;
    REQUIRE(run_cli(ws.flag() + " gen-data") == 0);
    REQUIRE(run_cli(ws.flag() + " --set train.epochs=0 train") == 0);
    const auto a = fire::read_json_file(ws.out("train_report.json").string());
    REQUIRE(run_cli(ws.flag() + " --set train.epochs=0 train") == 0);
    const auto b = fire::read_json_file(ws.out("train_report.json").string());
    CHECK(a.at("model_digest") == b.at("model_digest"));
    CHECK(a.at("epochs").get<int>() == 0);
}

TEST_CASE("two data seeds produce different digests") {
    Workspace ws;
    REQUIRE(run_cli(ws.flag() + " gen-data") == 0);
    const auto gen1 = fire::read_json_file(ws.out("gen_data.json").string());
    REQUIRE(run_cli(ws.flag() + " --set seed=4 gen-data") == 0);
    const auto gen2 = fire::read_json_file(ws.out("gen_data.json").string());
    CHECK(gen1.at("digest") != gen2.at("digest"));
    CHECK(gen1.at("stamp").at("config_hash") != gen2.at("stamp").at("config_hash"));
}

TEST_CASE("distinct exit codes for config and i/o failures") {
    Workspace ws;
    CHECK(run_cli(ws.flag() + " --set repair.lambda=7 stream") == 2);
    // no dataset generated yet -> i/o error
    CHECK(run_cli(ws.flag() + " train") == 3);
}

TEST_CASE("sweep values from the CLI match a direct library call") {
    Workspace ws;
    REQUIRE(run_cli(ws.flag() + " gen-data") == 0);
    REQUIRE(run_cli(ws.flag() + " train") == 0);
    REQUIRE(run_cli(ws.flag() + " sweep") == 0);
    const auto cli_rows = fire::read_json_file(ws.out("sweep.json").string()).at("rows");

    std::ifstream is((ws.dir / "cfg.json").string());
    nlohmann::json raw;
    is >> raw;
    const fire::ExperimentConfig cfg = fire::config_from_json(raw);
    const fire::DataBundle data = fire::load_dataset(ws.out("dataset.bin").string());
    const fire::LayeredModel model = fire::load_checkpoint(ws.out("model.ckpt").string());
    const fire::TriggerOp trigger =
        fire::materialize_trigger(cfg.trigger, data.test.width, data.test.height, data.test.channels);
    fire::Dataset eval = data.test;
    eval.images.resize(cfg.sweep_eval_count);
    eval.labels.resize(cfg.sweep_eval_count);
    const auto pairs = fire::make_paired_set(eval, trigger);
    fire::RepairConfig rc;
    rc.taps = cfg.taps;
    const fire::SweepResult direct =
        fire::layer_sweep(model, pairs, cfg.taps, rc, cfg.sweep_direction_pairs);

    REQUIRE(cli_rows.size() == direct.rows.size());
    for (std::size_t i = 0; i < direct.rows.size(); ++i) {
        CHECK(cli_rows[i].at("tap").get<int>() == direct.rows[i].tap);
        CHECK(cli_rows[i].at("pa").get<double>() == doctest::Approx(direct.rows[i].poisoned_accuracy).epsilon(1e-9));
    }
}

TEST_CASE("generated class counts match the config") {
    Workspace ws;
    REQUIRE(run_cli(ws.flag() + " gen-data") == 0);
    const auto bundle = fire::read_json_file(ws.out("gen_data.json").string());
    CHECK(bundle.at("train_count").get<int>() == 400);
    CHECK(bundle.at("test_count").get<int>() == 160);
}

TEST_CASE("FIRE_OUT_DIR overrides the configured output directory") {
    Workspace ws;
    const fs::path alt = ws.dir / "alt_out";
    const std::string cmd = "FIRE_OUT_DIR=" + alt.string() + " " + cli_bin() + " " + ws.flag() +
                            " gen-data >/dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(fs::exists(alt / "dataset.bin"));
    CHECK(!fs::exists(ws.out("dataset.bin")));
}
