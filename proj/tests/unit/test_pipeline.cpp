#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "timetrail/error.hpp"
#include "timetrail/pipeline.hpp"
#include "timetrail/text.hpp"

using namespace timetrail;

namespace {

RunConfig small_config(const std::filesystem::path& out) {
    RunConfig c;
    c.seed = 5;
    c.output_dir = out;
    c.generator.n_users = 300;
    c.generator.n_terminals = 100;
    c.generator.target_rows = 6000;
    c.generator.fraud_rate = 0.01;
    c.gbt.n_trees = 30;
    c.undersample_ratio = 20;
    return c;
}

std::string validation_message(const nlohmann::json& j) {
    try {
        auto c = j.get<RunConfig>();
        validate(c);
    } catch (const ValidationError& e) {
        return e.what();
    }
    ADD_FAILURE() << "accepted " << j.dump();
    return {};
}

}  // namespace

TEST(RunConfigJson, DefaultsRoundTrip) {
    RunConfig c;
    nlohmann::json j = c;
    auto back = j.get<RunConfig>();
    nlohmann::json again = back;
    EXPECT_EQ(again.dump(), j.dump());
}

TEST(RunConfigJson, UnknownAndIllTypedFieldsAreNamed) {
    EXPECT_NE(validation_message({{"sede", 1}}).find("sede"), std::string::npos);
    EXPECT_NE(validation_message({{"gbt", {{"max_depth", "deep"}}}}).find("gbt.max_depth"), std::string::npos);
    EXPECT_NE(validation_message({{"split", {{"train", 0.9}, {"val", 0.2}}}}).find("split"), std::string::npos);
    EXPECT_NE(validation_message({{"threshold", 1.5}}).find("threshold"), std::string::npos);
    EXPECT_NE(validation_message({{"generator", {{"seed", 3}}}}).find("generator.seed"), std::string::npos);
    EXPECT_NE(validation_message({{"temporal_features", {"hour_of_day", "nope"}}}).find("temporal_features"),
              std::string::npos);
}

TEST(Stages, NamesRoundTrip) {
    for (auto s : kAllStages) EXPECT_EQ(parse_stage(to_string(s)), s);
    EXPECT_THROW(parse_stage("deploy"), ValidationError);
}

TEST(Seeds, StreamsDifferAndFollowRootSeed) {
    RunConfig a, b;
    b.seed = a.seed + 1;
    EXPECT_NE(generator_seed(a), undersample_seed(a));
    EXPECT_NE(generator_seed(a), generator_seed(b));
}

TEST(Pipeline, RunAllWritesManifestOfAllArtifacts) {
    auto dir = oracle::fresh_dir("pipeline_all");
    auto manifest = run_all(small_config(dir));
    auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
    ASSERT_EQ(j.size(), manifest.size());
    std::set<std::string> stages;
    for (const auto& e : manifest) {
        EXPECT_EQ(sha256_hex(read_file(dir / e.path)), e.sha256) << e.path;
        stages.insert(e.stage);
    }
    EXPECT_EQ(stages.size(), kAllStages.size());
    for (auto f : {"dataset.csv", "enriched.csv", "comparison.csv", "model_timetrail.json", "tis_report.json",
                   "tis_hist.svg", "flag_series.csv", "heatmap_all.svg", "predictions_test.csv"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;

    auto cmp = read_file(dir / "comparison.csv");
    EXPECT_EQ(cmp.substr(0, cmp.find('\n')), "metric,baseline,timetrail");
    auto base = nlohmann::json::parse(read_file(dir / "report_baseline.json"));
    auto tt = nlohmann::json::parse(read_file(dir / "report_timetrail.json"));
    EXPECT_EQ(base["fingerprint"], tt["fingerprint"]);
    EXPECT_TRUE(base["metrics"]["tis"].is_null());
}

TEST(Pipeline, RunAllIsDeterministic) {
    auto a = oracle::fresh_dir("pipeline_det_a");
    auto b = oracle::fresh_dir("pipeline_det_b");
    EXPECT_EQ(run_all(small_config(a)), run_all(small_config(b)));
    EXPECT_EQ(read_file(a / "manifest.json"), read_file(b / "manifest.json"));
}

TEST(Pipeline, StagesRunIndividuallyFromPersistedFiles) {
    auto dir = oracle::fresh_dir("pipeline_stages");
    auto cfg = small_config(dir);
    for (auto s : kAllStages) EXPECT_FALSE(run_stage(s, cfg).empty()) << to_string(s);
    auto other = oracle::fresh_dir("pipeline_stages_ref");
    run_all(small_config(other));
    EXPECT_EQ(read_file(dir / "comparison.csv"), read_file(other / "comparison.csv"));
}

TEST(Pipeline, MissingInputsAreIoErrorsNamingTheStage) {
    auto dir = oracle::fresh_dir("pipeline_missing");
    auto cfg = small_config(dir);
    try {
        run_stage(Stage::evaluate, cfg);
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("evaluate"), std::string::npos) << e.what();
    }
    cfg.input = (dir / "nowhere.csv").string();
    EXPECT_THROW(run_all(cfg), IoError);
}

TEST(Pipeline, ExternalInputSkipsGeneration) {
    auto src = oracle::fresh_dir("pipeline_src");
    auto cfg = small_config(src);
    run_stage(Stage::generate, cfg);
    auto dir = oracle::fresh_dir("pipeline_input");
    auto ext = small_config(dir);
    ext.input = (src / "dataset.csv").string();
    auto manifest = run_all(ext);
    for (const auto& e : manifest) EXPECT_NE(e.stage, "generate");
    EXPECT_FALSE(std::filesystem::exists(dir / "dataset.csv"));
}
