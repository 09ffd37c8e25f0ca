// timetrail <subcommand> --config <path> [--out <dir>] [--seed <n>]
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 I/O failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "timetrail/error.hpp"
#include "timetrail/pipeline.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Options {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
};

timetrail::RunConfig resolve(const Options& o) {
    auto cfg = timetrail::load_run_config(o.config);
    if (o.out) cfg.output_dir = *o.out;
    if (o.seed) cfg.seed = *o.seed;
    timetrail::validate(cfg);
    return cfg;
}

int run(const std::string& command, const Options& o) {
    auto cfg = resolve(o);
    if (command == "run-all") {
        auto manifest = timetrail::run_all(cfg);
        fmt::print("run-all: {} artifacts, manifest at {}\n", manifest.size(),
                   (cfg.output_dir / "manifest.json").string());
        return 0;
    }
    auto artifacts = timetrail::run_stage(timetrail::parse_stage(command), cfg);
    for (const auto& a : artifacts) fmt::print("{}\n", (cfg.output_dir / a.path).string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal enrichment, correlation analysis and explainable fraud classification"};
    app.require_subcommand(1);

    Options opts;
    std::string chosen;
    const char* commands[][2] = {
        {"generate", "Generate a synthetic labeled transaction dataset"},
        {"preprocess", "Cleanse the dataset and split it by time"},
        {"enrich", "Derive temporal attributes for every transaction"},
        {"correlate", "Windowed and whole-range Pearson correlation exports"},
        {"train", "Fit scalers, the logistic baseline and the boosted model"},
        {"evaluate", "Score the test split and compare both models"},
        {"explain", "Explanatory sequences and TIS for the test split"},
        {"plot", "Heatmaps, flag series, sequence and TIS plots"},
        {"run-all", "Every stage in order plus a content-hashed manifest"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opts.config, "Run configuration (JSON)")->required();
        sub->add_option("--out", opts.out, "Output directory, overrides paths.output_dir");
        sub->add_option("--seed", opts.seed, "Root seed, overrides the configured seed");
        sub->callback([&chosen, n = std::string(name)] { chosen = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        return run(chosen, opts);
    } catch (const timetrail::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const timetrail::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}
