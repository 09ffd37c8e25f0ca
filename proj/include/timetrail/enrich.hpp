#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "timetrail/domain.hpp"
#include "timetrail/features.hpp"

namespace timetrail {

// Every rolling window is half-open, (t - w, t], and includes the row itself.
struct EnrichConfig {
    std::int64_t recency_cap_seconds = 30 * 86400;
    std::int64_t user_window_short = 24 * 3600;
    std::int64_t user_window_burst = 48 * 3600;
    std::int64_t user_window_week = 7 * 86400;
    std::int64_t terminal_window = 48 * 3600;
    std::int64_t amount_mean_window = 30 * 86400;
    // Added to numerator and denominator of the amount ratio so that a zero
    // amount or a zero prior mean still yields a finite, positive ratio.
    double amount_ratio_smoothing = 0.01;
};

struct TemporalAttributes {
    int hour_of_day = 0;
    int day_of_week = 0;  // 0 = Monday
    int is_night = 0;     // hour in [0, 6)
    std::int64_t seconds_since_last_user_tx = 0;
    std::uint32_t user_tx_count_24h = 1;
    std::uint32_t user_tx_count_48h = 1;
    std::uint32_t user_tx_count_7d = 1;
    std::uint32_t terminal_tx_count_48h = 1;
    double amount_over_user_mean_30d = 1.0;

    static constexpr std::size_t kCount = 9;
    static const std::array<std::string_view, kCount>& names();
    std::array<double, kCount> values() const;

    friend bool operator==(const TemporalAttributes&, const TemporalAttributes&) = default;
};

struct TransactionContext {
    TxType tx_type = TxType::purchase;
    std::string terminal_id;
    double amount = 0.0;

    friend bool operator==(const TransactionContext&, const TransactionContext&) = default;
};

struct EnrichedTransaction {
    Transaction base;
    TemporalAttributes attrs;
    TransactionContext context;

    friend bool operator==(const EnrichedTransaction&, const EnrichedTransaction&) = default;
};

// For each row, the number of rows with the same key whose timestamp lies in
// (t - w, t]. Rows must be sorted by timestamp.
std::vector<std::uint32_t> rolling_user_counts(std::span<const Transaction> rows, std::int64_t window_seconds);
std::vector<std::uint32_t> rolling_terminal_counts(std::span<const Transaction> rows,
                                                   std::int64_t window_seconds);

// One output per input row, same order. Attributes of a row depend only on
// rows with timestamp <= its own. Throws ValidationError on unsorted input.
std::vector<EnrichedTransaction> enrich(std::span<const Transaction> rows, const EnrichConfig& cfg = {});
inline std::vector<EnrichedTransaction> enrich(const Dataset& d, const EnrichConfig& cfg = {}) {
    return enrich(d.rows(), cfg);
}

// Base transaction columns followed by the nine attribute columns.
std::string serialize_enriched(std::span<const EnrichedTransaction> rows);
std::vector<EnrichedTransaction> parse_enriched(std::string_view csv_text);

// Feature sets. Raw features describe the transaction alone (amount and a
// one-hot of tx_type); enriched features append the temporal attributes.
const std::vector<std::string>& raw_feature_names();
std::vector<std::string> temporal_feature_names();
std::vector<std::string> enriched_feature_names();

FeatureTable raw_feature_table(std::span<const EnrichedTransaction> rows);
FeatureTable enriched_feature_table(std::span<const EnrichedTransaction> rows);

}  // namespace timetrail
