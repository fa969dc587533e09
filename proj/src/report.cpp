#include "fire/report.hpp"

#include <algorithm>
#include <fstream>

#include "fire/errors.hpp"

namespace fire {

nlohmann::json stamp_json(const RunStamp& stamp) {
    return {{"config_hash", stamp.config_hash}, {"seed", stamp.seed}, {"version", stamp.version}};
}

nlohmann::json stream_record_json(const StreamRecord& rec) {
    nlohmann::json j{{"index", rec.index},
                     {"unmitigated", rec.unmitigated},
                     {"final", rec.final_label},
                     {"exit_tap", rec.exit_tap},
                     {"per_tap_labels", rec.per_tap_labels},
                     {"latency_us", rec.latency_us},
                     {"true_label", rec.true_label},
                     {"poisoned", rec.poisoned}};
    if (rec.failed) j["error"] = rec.error;
    return j;
}

nlohmann::json stream_summary_json(const StreamReport& report, const RunStamp& stamp) {
    return {{"stamp", stamp_json(stamp)},
            {"ca", report.clean_accuracy},
            {"pa", report.poisoned_accuracy},
            {"asr", report.attack_success_rate},
            {"target_label", report.target_label},
            {"samples", report.records.size()},
            {"pa_curve", report.pa_curve},
            {"timing",
             {{"init_us", report.timing.init_us},
              {"online_median_us", report.timing.online_median_us},
              {"online_p95_us", report.timing.online_p95_us}}}};
}

void write_stream_jsonl(const std::string& path, const StreamReport& report) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open report file for writing: " + path);
    for (const auto& rec : report.records) os << stream_record_json(rec).dump() << "\n";
    if (!os) throw IoError("short write: " + path);
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open file for writing: " + path);
    os << j.dump(2) << "\n";
    if (!os) throw IoError("short write: " + path);
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open file: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse " + path + ": " + e.what());
    }
    return j;
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open file: " + path);
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.push_back(nlohmann::json::parse(line));
    }
    return out;
}

namespace {

void write_stamp_comment(std::ofstream& os, const RunStamp& stamp) {
    os << "# config_hash=" << stamp.config_hash << " seed=" << stamp.seed << " version=" << stamp.version << "\n";
}

}  // namespace

void write_sweep_csv(const std::string& path, const SweepResult& sweep, const RunStamp& stamp) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open file for writing: " + path);
    write_stamp_comment(os, stamp);
    os << "# tap: latent tap index; pa: poisoned accuracy after repair at that tap; best: 1 for the argmax row\n";
    os << "tap,pa,best\n";
    for (const auto& row : sweep.rows)
        os << row.tap << "," << row.poisoned_accuracy << "," << (row.tap == sweep.best_tap ? 1 : 0) << "\n";
    if (!os) throw IoError("short write: " + path);
}

void write_ablation_csv(const std::string& path, const std::vector<AblationPoint>& points, int position,
                        const RunStamp& stamp) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open file for writing: " + path);
    write_stamp_comment(os, stamp);
    os << "# n_clean: centroid-initialization sample count; pa_at_position: mean PA of stream position " << position
       << " across seeds\n";
    os << "n_clean,pa_at_position\n";
    for (const auto& p : points) os << p.n_clean << "," << p.pa_at_position << "\n";
    if (!os) throw IoError("short write: " + path);
}

void write_pa_curve_csv(const std::string& path, const std::vector<StreamReport>& reports, const RunStamp& stamp) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open file for writing: " + path);
    write_stamp_comment(os, stamp);
    os << "# position: 1-based stream position; pa: mean correctness of poisoned entries at that position\n";
    os << "position,pa\n";
    std::size_t max_len = 0;
    for (const auto& r : reports) max_len = std::max(max_len, r.records.size());
    for (std::size_t i = 0; i < max_len; ++i) {
        double sum = 0.0;
        int n = 0;
        for (const auto& r : reports) {
            if (i >= r.records.size()) continue;
            const auto& rec = r.records[i];
            if (!rec.poisoned || rec.failed) continue;
            sum += rec.final_label == rec.true_label ? 1.0 : 0.0;
            ++n;
        }
        os << (i + 1) << "," << (n ? sum / n : 0.0) << "\n";
    }
    if (!os) throw IoError("short write: " + path);
}

}  // namespace fire
