#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fire/metrics.hpp"
#include "fire/repair.hpp"

namespace fire {

// Provenance block embedded in every output file.
struct RunStamp {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version;
};
nlohmann::json stamp_json(const RunStamp& stamp);

nlohmann::json stream_record_json(const StreamRecord& rec);
nlohmann::json stream_summary_json(const StreamReport& report, const RunStamp& stamp);

// One record per line; see stream_record_json for the schema.
void write_stream_jsonl(const std::string& path, const StreamReport& report);
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);
std::vector<nlohmann::json> read_jsonl(const std::string& path);

// Columns: tap, pa, best (0/1). Header comments carry the stamp.
void write_sweep_csv(const std::string& path, const SweepResult& sweep, const RunStamp& stamp);

// Columns: n_clean, pa_at_position.
void write_ablation_csv(const std::string& path, const std::vector<AblationPoint>& points, int position,
                        const RunStamp& stamp);

// Columns: position, pa (mean across the given reports, poisoned entries).
void write_pa_curve_csv(const std::string& path, const std::vector<StreamReport>& reports, const RunStamp& stamp);

}  // namespace fire
