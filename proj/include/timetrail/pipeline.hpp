#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "timetrail/domain.hpp"
#include "timetrail/enrich.hpp"
#include "timetrail/model.hpp"
#include "timetrail/simgen.hpp"

namespace timetrail {

struct CorrelateSettings {
    std::int64_t window_seconds = 86400;
    std::int64_t stride_seconds = 86400;
    std::vector<std::string> attributes;  // empty: temporal attributes plus amount
    std::vector<std::pair<std::string, std::string>> pairs = {
        {"user_tx_count_48h", "seconds_since_last_user_tx"}, {"terminal_tx_count_48h", "user_tx_count_24h"}};
    std::size_t top_windows = 3;  // per-window heatmaps, busiest fraud windows first
};

struct RunConfig {
    std::uint64_t seed = 42;
    std::string input;  // existing transactions CSV; empty means generate
    std::filesystem::path output_dir = "out";
    ScenarioConfig generator;  // its seed is derived from `seed`
    CleansePolicy cleanse{DedupKey::tx_id, false, 3.0};
    double train_frac = 0.6;
    double val_frac = 0.2;
    EnrichConfig enrich;
    CorrelateSettings correlate;
    GBTConfig gbt;
    LogisticConfig logistic;
    double undersample_ratio = 10.0;
    double threshold = 0.5;
    std::vector<std::string> temporal_features = temporal_feature_names();
    std::size_t explain_top_k = 5;
    std::size_t tis_bins = 10;
    std::int64_t series_window_seconds = 86400;

    std::vector<std::string> correlation_attributes() const;
};

// Unknown or ill-typed fields throw ValidationError naming the field.
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);
void validate(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

enum class Stage { generate, preprocess, enrich, correlate, train, evaluate, explain, plot };
inline constexpr std::array<Stage, 8> kAllStages = {Stage::generate, Stage::preprocess, Stage::enrich,
                                                    Stage::correlate, Stage::train, Stage::evaluate,
                                                    Stage::explain, Stage::plot};
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

// Seeds of the independent random streams used by the stages.
std::uint64_t generator_seed(const RunConfig& c);
std::uint64_t undersample_seed(const RunConfig& c);

struct Artifact {
    std::string path;  // relative to the output directory
    Stage stage = Stage::generate;
};

struct ManifestEntry {
    std::string path;
    std::string sha256;
    std::string stage;
    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// Runs one stage from the files earlier stages left in the output directory.
std::vector<Artifact> run_stage(Stage s, const RunConfig& c);

// Every stage in order (generate is skipped when `input` is set), then
// manifest.json. A failing stage rethrows its error prefixed with the stage
// name, preserving the error type.
std::vector<ManifestEntry> run_all(const RunConfig& c);

std::vector<ManifestEntry> build_manifest(const std::filesystem::path& out_dir, std::span<const Artifact> artifacts);
std::string manifest_json(std::span<const ManifestEntry> m);

}  // namespace timetrail
