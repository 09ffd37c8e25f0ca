#include "timetrail/enrich.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <unordered_map>

#include <fmt/format.h>

#include "timetrail/error.hpp"
#include "timetrail/text.hpp"

namespace timetrail {

const std::array<std::string_view, TemporalAttributes::kCount>& TemporalAttributes::names() {
    static const std::array<std::string_view, kCount> kNames = {
        "hour_of_day",          "day_of_week",       "is_night",
        "seconds_since_last_user_tx", "user_tx_count_24h", "user_tx_count_48h",
        "user_tx_count_7d",     "terminal_tx_count_48h", "amount_over_user_mean_30d"};
    return kNames;
}

std::array<double, TemporalAttributes::kCount> TemporalAttributes::values() const {
    return {static_cast<double>(hour_of_day),
            static_cast<double>(day_of_week),
            static_cast<double>(is_night),
            static_cast<double>(seconds_since_last_user_tx),
            static_cast<double>(user_tx_count_24h),
            static_cast<double>(user_tx_count_48h),
            static_cast<double>(user_tx_count_7d),
            static_cast<double>(terminal_tx_count_48h),
            amount_over_user_mean_30d};
}

namespace {

template <typename KeyFn>
std::unordered_map<std::string_view, std::vector<std::size_t>> group_rows(std::span<const Transaction> rows,
                                                                          KeyFn key) {
    std::unordered_map<std::string_view, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < rows.size(); ++i) groups[key(rows[i])].push_back(i);
    return groups;
}

// Two-pointer sweep over one time-sorted group. For position p, `first[p]` is
// the first group position with t > t_p - w and `last[p]` the last position
// with t <= t_p.
struct WindowBounds {
    std::vector<std::size_t> first;
    std::vector<std::size_t> last;
};

WindowBounds sweep(std::span<const Transaction> rows, const std::vector<std::size_t>& group, std::int64_t w) {
    const auto m = group.size();
    WindowBounds b{std::vector<std::size_t>(m), std::vector<std::size_t>(m)};
    std::size_t lo = 0, hi = 0;
    for (std::size_t p = 0; p < m; ++p) {
        auto t = rows[group[p]].timestamp;
        if (hi < p) hi = p;
        while (hi + 1 < m && rows[group[hi + 1]].timestamp <= t) ++hi;
        while (rows[group[lo]].timestamp <= t - w) ++lo;
        b.first[p] = lo;
        b.last[p] = hi;
    }
    return b;
}

template <typename KeyFn>
std::vector<std::uint32_t> rolling_counts(std::span<const Transaction> rows, std::int64_t w, KeyFn key) {
    if (w <= 0) throw ValidationError("rolling window must be positive");
    std::vector<std::uint32_t> out(rows.size(), 0);
    for (const auto& [_, group] : group_rows(rows, key)) {
        auto b = sweep(rows, group, w);
        for (std::size_t p = 0; p < group.size(); ++p)
            out[group[p]] = static_cast<std::uint32_t>(b.last[p] - b.first[p] + 1);
    }
    return out;
}

void require_sorted(std::span<const Transaction> rows) {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].timestamp < rows[i - 1].timestamp)
            throw ValidationError(fmt::format("enrich requires time-sorted rows; row {} ('{}') precedes row {}",
                                              i, rows[i].tx_id, i - 1));
}

const auto kUserKey = [](const Transaction& t) { return std::string_view(t.user_id); };
const auto kTerminalKey = [](const Transaction& t) { return std::string_view(t.terminal_id); };

std::int64_t to_cents(double amount) { return std::llround(amount * 100.0); }

}  // namespace

std::vector<std::uint32_t> rolling_user_counts(std::span<const Transaction> rows, std::int64_t window_seconds) {
    return rolling_counts(rows, window_seconds, kUserKey);
}

std::vector<std::uint32_t> rolling_terminal_counts(std::span<const Transaction> rows,
                                                   std::int64_t window_seconds) {
    return rolling_counts(rows, window_seconds, kTerminalKey);
}

std::vector<EnrichedTransaction> enrich(std::span<const Transaction> rows, const EnrichConfig& cfg) {
    require_sorted(rows);
    std::vector<EnrichedTransaction> out(rows.size());

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& tx = rows[i];
        auto& e = out[i];
        e.base = tx;
        e.context = {tx.tx_type, tx.terminal_id, tx.amount};
        auto t = tx.timestamp;
        auto day = t >= 0 ? t / 86400 : (t - 86399) / 86400;
        auto sec_of_day = t - day * 86400;
        e.attrs.hour_of_day = static_cast<int>(sec_of_day / 3600);
        // 1970-01-01 was a Thursday (index 3 with Monday = 0).
        e.attrs.day_of_week = static_cast<int>(((day + 3) % 7 + 7) % 7);
        e.attrs.is_night = e.attrs.hour_of_day < 6 ? 1 : 0;
    }

    auto c24 = rolling_user_counts(rows, cfg.user_window_short);
    auto c48 = rolling_user_counts(rows, cfg.user_window_burst);
    auto c7d = rolling_user_counts(rows, cfg.user_window_week);
    auto term = rolling_terminal_counts(rows, cfg.terminal_window);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[i].attrs.user_tx_count_24h = c24[i];
        out[i].attrs.user_tx_count_48h = c48[i];
        out[i].attrs.user_tx_count_7d = c7d[i];
        out[i].attrs.terminal_tx_count_48h = term[i];
    }

    // Recency and the prior-only amount mean, per user. Amount sums run in
    // integer cents so the rolling mean is exact.
    for (const auto& [_, group] : group_rows(rows, kUserKey)) {
        auto b = sweep(rows, group, cfg.amount_mean_window);
        std::vector<std::int64_t> prefix(group.size() + 1, 0);
        for (std::size_t p = 0; p < group.size(); ++p) prefix[p + 1] = prefix[p] + to_cents(rows[group[p]].amount);

        for (std::size_t p = 0; p < group.size(); ++p) {
            auto& a = out[group[p]].attrs;
            const auto& tx = rows[group[p]];
            a.seconds_since_last_user_tx =
                p == 0 ? cfg.recency_cap_seconds
                       : std::min(tx.timestamp - rows[group[p - 1]].timestamp, cfg.recency_cap_seconds);

            auto lo = b.first[p];
            if (lo < p) {
                double mean = static_cast<double>(prefix[p] - prefix[lo]) / static_cast<double>(p - lo) / 100.0;
                a.amount_over_user_mean_30d =
                    (tx.amount + cfg.amount_ratio_smoothing) / (mean + cfg.amount_ratio_smoothing);
            } else {
                a.amount_over_user_mean_30d = 1.0;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Enriched CSV
// ---------------------------------------------------------------------------

std::string serialize_enriched(std::span<const EnrichedTransaction> rows) {
    std::vector<Transaction> base;
    base.reserve(rows.size());
    for (const auto& r : rows) base.push_back(r.base);
    auto base_csv = serialize_transactions(std::span<const Transaction>(base));
    auto lines = split_lines(base_csv);

    fmt::memory_buffer out;
    fmt::format_to(std::back_inserter(out), "{}", lines.front());
    for (auto name : TemporalAttributes::names()) fmt::format_to(std::back_inserter(out), ",{}", name);
    out.push_back('\n');
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& a = rows[i].attrs;
        fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{},{},{},{},{}\n", lines[i + 1], a.hour_of_day,
                       a.day_of_week, a.is_night, a.seconds_since_last_user_tx, a.user_tx_count_24h,
                       a.user_tx_count_48h, a.user_tx_count_7d, a.terminal_tx_count_48h,
                       a.amount_over_user_mean_30d);
    }
    return fmt::to_string(out);
}

std::vector<EnrichedTransaction> parse_enriched(std::string_view csv_text) {
    auto base = parse_transactions(csv_text);
    auto lines = split_lines(csv_text);
    auto header = split_fields(lines.front());
    std::array<std::size_t, TemporalAttributes::kCount> cols{};
    std::size_t id_col = 0;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "tx_id") id_col = i;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        auto it = std::find(header.begin(), header.end(), TemporalAttributes::names()[k]);
        if (it == header.end())
            throw ValidationError(fmt::format("line 1: enriched header lacks column '{}'", TemporalAttributes::names()[k]));
        cols[k] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<EnrichedTransaction> out;
    out.reserve(base.size());
    std::size_t row = 0;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        auto fields = split_fields(lines[ln]);
        const auto& tx = base[row++];
        if (fields[id_col] != tx.tx_id)
            throw ValidationError(fmt::format("line {}: enriched rows are not in canonical time order", ln + 1));
        std::array<double, TemporalAttributes::kCount> v{};
        for (std::size_t k = 0; k < cols.size(); ++k) {
            auto f = fields[cols[k]];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v[k]);
            if (ec != std::errc{} || p != f.data() + f.size())
                throw ValidationError(
                    fmt::format("line {}: field '{}': not a number '{}'", ln + 1, TemporalAttributes::names()[k], f));
        }
        EnrichedTransaction e;
        e.base = tx;
        e.context = {tx.tx_type, tx.terminal_id, tx.amount};
        e.attrs.hour_of_day = static_cast<int>(v[0]);
        e.attrs.day_of_week = static_cast<int>(v[1]);
        e.attrs.is_night = static_cast<int>(v[2]);
        e.attrs.seconds_since_last_user_tx = static_cast<std::int64_t>(v[3]);
        e.attrs.user_tx_count_24h = static_cast<std::uint32_t>(v[4]);
        e.attrs.user_tx_count_48h = static_cast<std::uint32_t>(v[5]);
        e.attrs.user_tx_count_7d = static_cast<std::uint32_t>(v[6]);
        e.attrs.terminal_tx_count_48h = static_cast<std::uint32_t>(v[7]);
        e.attrs.amount_over_user_mean_30d = v[8];
        out.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature tables
// ---------------------------------------------------------------------------

const std::vector<std::string>& raw_feature_names() {
    static const std::vector<std::string> kNames = {"amount", "type_purchase", "type_withdrawal", "type_transfer",
                                                    "type_deposit"};
    return kNames;
}

std::vector<std::string> temporal_feature_names() {
    return {TemporalAttributes::names().begin(), TemporalAttributes::names().end()};
}

std::vector<std::string> enriched_feature_names() {
    auto names = raw_feature_names();
    for (auto n : TemporalAttributes::names()) names.emplace_back(n);
    return names;
}

namespace {

FeatureTable build_table(std::span<const EnrichedTransaction> rows, bool with_temporal) {
    auto names = with_temporal ? enriched_feature_names() : raw_feature_names();
    std::vector<double> vals;
    vals.reserve(rows.size() * names.size());
    bool labeled = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.base.label.has_value(); });
    std::optional<std::vector<int>> labels;
    if (labeled) labels.emplace().reserve(rows.size());
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (const auto& r : rows) {
        vals.push_back(r.context.amount);
        for (auto t : {TxType::purchase, TxType::withdrawal, TxType::transfer, TxType::deposit})
            vals.push_back(r.context.tx_type == t ? 1.0 : 0.0);
        if (with_temporal) {
            auto a = r.attrs.values();
            vals.insert(vals.end(), a.begin(), a.end());
        }
        if (labeled) labels->push_back(r.base.is_fraud() ? 1 : 0);
        ids.push_back(r.base.tx_id);
    }
    return FeatureTable(std::move(names), std::move(vals), std::move(labels), std::move(ids));
}

}  // namespace

FeatureTable raw_feature_table(std::span<const EnrichedTransaction> rows) { return build_table(rows, false); }

FeatureTable enriched_feature_table(std::span<const EnrichedTransaction> rows) { return build_table(rows, true); }

}  // namespace timetrail
