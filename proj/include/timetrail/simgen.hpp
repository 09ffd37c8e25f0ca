#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "timetrail/domain.hpp"

namespace timetrail {

enum class Scenario { burst, night_owl, new_account_abuse, terminal_compromise, amount_spike };

inline constexpr std::size_t kScenarioCount = 5;
inline constexpr std::array<Scenario, kScenarioCount> kAllScenarios = {
    Scenario::burst, Scenario::night_owl, Scenario::new_account_abuse, Scenario::terminal_compromise,
    Scenario::amount_spike};

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view s);  // throws ValidationError

struct ScenarioConfig {
    std::size_t n_users = 5000;
    std::size_t n_terminals = 1000;
    Timestamp period_start = 1672531200;  // 2023-01-01T00:00:00Z
    Timestamp period_end = 1688169600;    // 2023-07-01T00:00:00Z, exclusive
    std::size_t target_rows = 50000;
    double fraud_rate = 0.005;
    std::array<double, kScenarioCount> scenario_mix = {0.2, 0.2, 0.2, 0.2, 0.2};
    std::uint64_t seed = 42;
};

// Throws ValidationError naming the offending field.
void validate(const ScenarioConfig& cfg);

// `period` is {"start", "end"} with epoch or ISO-8601 values; `scenario_mix`
// maps scenario names to weights (absent names weigh 0). Unknown fields are
// rejected.
void to_json(nlohmann::json& j, const ScenarioConfig& c);
void from_json(const nlohmann::json& j, ScenarioConfig& c);

// round(target_rows * fraud_rate).
std::size_t fraud_row_count(const ScenarioConfig& cfg);

// Apportions `total` by `weights` with the largest-remainder method; ties in
// the remainder go to the earlier index.
std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const double> weights);

// Seed of an independent stream derived from the root seed.
std::uint64_t stream_seed(std::uint64_t root, std::uint64_t stream);

// Labeled dataset with exactly target_rows rows of which exactly
// fraud_row_count(cfg) are fraud, every fraud row tagged with its scenario.
// All timestamps lie in [period_start, period_end). Identical configs give
// identical rows.
//
// Scenarios:
//   burst                five legit precursors in the victim's preceding 12h,
//                        then 3-8 fraud rows minutes apart
//   night_owl            2-4 fraud rows between 01:00 and 06:00, minutes apart
//   new_account_abuse    a fresh account whose 3-6 rows within 24h are all fraud
//   terminal_compromise  5-12 distinct users on one terminal within 3h
//   amount_spike         10-20x the largest amount in the victim's prior 30 days,
//                        after two legit precursors in the prior week
// A scenario whose quota is exhausted truncates its last event.
Dataset generate(const ScenarioConfig& cfg);

struct DatasetSummary {
    std::size_t rows = 0;
    std::size_t fraud_count = 0;
    std::optional<double> fraud_rate;
    std::map<std::string, std::size_t> per_scenario;  // fraud rows by tag; untagged under ""
    std::vector<std::pair<Timestamp, std::size_t>> per_day;  // UTC day start, rows
};

DatasetSummary describe(const Dataset& d);
void to_json(nlohmann::json& j, const DatasetSummary& s);

}  // namespace timetrail
