#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "timetrail/error.hpp"
#include "timetrail/simgen.hpp"

using namespace timetrail;

namespace {

ScenarioConfig small(std::size_t rows = 10'000, double rate = 0.0013) {
    ScenarioConfig c;
    c.n_users = 400;
    c.n_terminals = 150;
    c.target_rows = rows;
    c.fraud_rate = rate;
    c.seed = 7;
    return c;
}

}  // namespace

TEST(Simgen, ExactFraudCount) {
    auto c = small();
    EXPECT_EQ(fraud_row_count(c), 13u);
    auto d = generate(c);
    EXPECT_EQ(d.size(), 10'000u);
    EXPECT_EQ(d.meta().fraud_count, 13u);
    EXPECT_EQ(*d.meta().fraud_rate, 0.0013);
}

TEST(Simgen, LargeScaleCountArithmetic) {
    ScenarioConfig c;
    c.target_rows = 1'750'000;
    c.fraud_rate = 0.001345;
    EXPECT_EQ(fraud_row_count(c), 2354u);
}

TEST(Simgen, ExactRateAcrossConfigs) {
    for (auto [rows, rate] : {std::pair{5000ul, 0.01}, {7000ul, 0.003}, {12345ul, 0.0021}}) {
        auto c = small(rows, rate);
        auto d = generate(c);
        EXPECT_EQ(d.size(), rows);
        EXPECT_EQ(d.meta().fraud_count, fraud_row_count(c));
        EXPECT_EQ(*d.meta().fraud_rate,
                  static_cast<double>(fraud_row_count(c)) / static_cast<double>(rows));
    }
}

TEST(Simgen, DeterministicBytesAndSeedSensitivity) {
    auto c = small(6000, 0.005);
    auto a = serialize_transactions(generate(c));
    EXPECT_EQ(a, serialize_transactions(generate(c)));
    c.seed = 8;
    EXPECT_NE(a, serialize_transactions(generate(c)));
}

TEST(Simgen, TimestampsWithinPeriodAndIdsUnique) {
    auto c = small(8000, 0.01);
    auto d = generate(c);
    std::set<std::string> ids;
    for (const auto& t : d.rows()) {
        EXPECT_GE(t.timestamp, c.period_start);
        EXPECT_LT(t.timestamp, c.period_end);
        ids.insert(t.tx_id);
        EXPECT_EQ(t.is_fraud(), !t.scenario.empty());
    }
    EXPECT_EQ(ids.size(), d.size());
}

TEST(Simgen, ScenarioCountsPartitionFraud) {
    auto c = small(20'000, 0.01);
    auto d = generate(c);
    auto s = describe(d);
    std::size_t sum = 0;
    for (const auto& [name, n] : s.per_scenario)
        if (!name.empty()) sum += n;
    EXPECT_EQ(sum, s.fraud_count);
    auto quotas = largest_remainder(fraud_row_count(c), c.scenario_mix);
    for (std::size_t k = 0; k < kScenarioCount; ++k)
        EXPECT_EQ(s.per_scenario[std::string(to_string(kAllScenarios[k]))], quotas[k]);
}

TEST(Simgen, BurstFraudHasFiveRecentUserRows) {
    auto c = small(10'000, 0.01);
    c.scenario_mix = {1, 0, 0, 0, 0};
    auto d = generate(c);
    std::map<std::string, std::vector<Timestamp>> by_user;
    for (const auto& t : d.rows()) by_user[t.user_id].push_back(t.timestamp);
    std::size_t checked = 0;
    for (const auto& t : d.rows()) {
        if (!t.is_fraud()) continue;
        EXPECT_EQ(t.scenario, "burst");
        const auto& ts = by_user[t.user_id];
        auto preceding = std::count_if(ts.begin(), ts.end(), [&](Timestamp x) {
            return x < t.timestamp && x > t.timestamp - 48 * 3600;
        });
        EXPECT_GE(preceding, 5) << t.tx_id;
        ++checked;
    }
    EXPECT_EQ(checked, 100u);
}

TEST(Simgen, NightOwlRowsAtNight) {
    auto c = small(10'000, 0.01);
    c.scenario_mix = {0, 1, 0, 0, 0};
    auto d = generate(c);
    for (const auto& t : d.rows())
        if (t.is_fraud()) {
            auto hour = ((t.timestamp % 86400) + 86400) % 86400 / 3600;
            EXPECT_GE(hour, 1);
            EXPECT_LT(hour, 6);
        }
}

TEST(Simgen, AmountSpikeExceedsPriorMax) {
    auto c = small(10'000, 0.01);
    c.scenario_mix = {0, 0, 0, 0, 1};
    auto d = generate(c);
    for (const auto& t : d.rows()) {
        if (!t.is_fraud()) continue;
        double prior_max = 0;
        for (const auto& o : d.rows())
            if (o.user_id == t.user_id && o.timestamp <= t.timestamp && o.timestamp > t.timestamp - 30 * 86400 &&
                o.tx_id != t.tx_id)
                prior_max = std::max(prior_max, o.amount);
        EXPECT_GE(t.amount, 8 * prior_max) << t.tx_id;
    }
}

TEST(Simgen, ValidationNamesField) {
    auto c = small();
    c.fraud_rate = 0.00001;
    try {
        generate(c);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("target_rows"), std::string::npos);
    }
    c = small();
    c.scenario_mix = {0.5, 0.5, 0.5, 0, 0};
    EXPECT_THROW(validate(c), ValidationError);
    c = small();
    c.period_end = c.period_start + 86400;
    EXPECT_THROW(validate(c), ValidationError);
}

TEST(Simgen, JsonAcceptsIsoPeriodAndRejectsUnknownFields) {
    auto j = nlohmann::json::parse(R"({"n_users": 100, "period": {"start": "2023-01-01T00:00:00Z", "end": 1688169600},
        "target_rows": 1000, "fraud_rate": 0.01, "scenario_mix": {"burst": 0.5, "night_owl": 0.5}})");
    auto c = j.get<ScenarioConfig>();
    EXPECT_EQ(c.period_start, 1672531200);
    EXPECT_EQ(c.scenario_mix[0], 0.5);
    EXPECT_EQ(c.scenario_mix[2], 0.0);
    nlohmann::json back = c;
    EXPECT_EQ(back.get<ScenarioConfig>().target_rows, 1000u);
    j["colour"] = 1;
    EXPECT_THROW(j.get<ScenarioConfig>(), ValidationError);
}

TEST(LargestRemainder, SumsAndTieBreak) {
    std::vector<double> w{0.2, 0.2, 0.2, 0.2, 0.2};
    auto q = largest_remainder(13, w);
    EXPECT_EQ(q, (std::vector<std::size_t>{3, 3, 3, 2, 2}));
    std::vector<double> w2{0.5, 0.3, 0.2};
    auto q2 = largest_remainder(7, w2);
    EXPECT_EQ(std::accumulate(q2.begin(), q2.end(), 0ul), 7u);
    EXPECT_EQ(q2, (std::vector<std::size_t>{4, 2, 1}));
}

TEST(StreamSeed, DistinctStreams) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(stream_seed(42, s));
    EXPECT_EQ(seen.size(), 1000u);
    EXPECT_EQ(stream_seed(42, 3), stream_seed(42, 3));
}

TEST(Describe, EmptyDatasetAndDailyCounts) {
    auto s = describe(Dataset());
    EXPECT_EQ(s.rows, 0u);
    EXPECT_EQ(s.fraud_count, 0u);
    auto d = generate(small(5000, 0.01));
    auto t = describe(d);
    std::size_t total = 0;
    for (const auto& [day, n] : t.per_day) {
        EXPECT_EQ(day % 86400, 0);
        total += n;
    }
    EXPECT_EQ(total, d.size());
}
