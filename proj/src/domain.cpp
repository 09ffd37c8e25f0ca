#include "timetrail/domain.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "timetrail/error.hpp"
#include "timetrail/text.hpp"

namespace timetrail {

std::string_view to_string(TxType t) {
    switch (t) {
        case TxType::purchase: return "purchase";
        case TxType::withdrawal: return "withdrawal";
        case TxType::transfer: return "transfer";
        case TxType::deposit: return "deposit";
    }
    return "purchase";
}

std::string_view to_string(Label l) { return l == Label::fraud ? "fraud" : "legit"; }

TxType parse_tx_type(std::string_view s) {
    if (s == "purchase") return TxType::purchase;
    if (s == "withdrawal") return TxType::withdrawal;
    if (s == "transfer") return TxType::transfer;
    if (s == "deposit") return TxType::deposit;
    throw ValidationError(fmt::format("unknown tx_type '{}'", s));
}

bool Transaction::has_missing_fields() const {
    return user_id.empty() || terminal_id.empty() || std::isnan(amount);
}

bool operator==(const Transaction& a, const Transaction& b) {
    auto same_amount = (std::isnan(a.amount) && std::isnan(b.amount)) || a.amount == b.amount;
    return same_amount && std::tie(a.tx_id, a.timestamp, a.user_id, a.terminal_id, a.tx_type,
                                   a.label, a.scenario) ==
                              std::tie(b.tx_id, b.timestamp, b.user_id, b.terminal_id, b.tx_type,
                                       b.label, b.scenario);
}

Dataset::Dataset(std::vector<Transaction> rows) : rows_(std::move(rows)) {
    std::stable_sort(rows_.begin(), rows_.end(), [](const Transaction& a, const Transaction& b) {
        return std::tie(a.timestamp, a.tx_id) < std::tie(b.timestamp, b.tx_id);
    });
    meta_.row_count = rows_.size();
    for (const auto& tx : rows_) {
        if (tx.label) {
            ++meta_.labeled_count;
            if (*tx.label == Label::fraud) ++meta_.fraud_count;
        }
    }
    if (!rows_.empty()) {
        meta_.t_min = rows_.front().timestamp;
        meta_.t_max = rows_.back().timestamp;
        if (meta_.labeled_count == rows_.size())
            meta_.fraud_rate = static_cast<double>(meta_.fraud_count) / static_cast<double>(rows_.size());
    }
}

// ---------------------------------------------------------------------------
// Timestamps
// ---------------------------------------------------------------------------

namespace {

bool parse_int(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

Timestamp parse_timestamp(std::string_view s) {
    std::int64_t epoch = 0;
    if (parse_int(s, epoch)) return epoch;

    // YYYY-MM-DDTHH:MM:SSZ
    if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
        s[16] != ':' || s[19] != 'Z')
        throw ValidationError(fmt::format("unparseable timestamp '{}'", s));
    std::int64_t y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) ||
        !parse_int(s.substr(8, 2), d) || !parse_int(s.substr(11, 2), h) ||
        !parse_int(s.substr(14, 2), mi) || !parse_int(s.substr(17, 2), se))
        throw ValidationError(fmt::format("unparseable timestamp '{}'", s));
    using namespace std::chrono;
    year_month_day ymd{year{static_cast<int>(y)}, month{static_cast<unsigned>(mo)},
                       day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || se > 60)
        throw ValidationError(fmt::format("invalid calendar timestamp '{}'", s));
    auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<Timestamp>(days) * 86400 + h * 3600 + mi * 60 + se;
}

std::string format_iso8601(Timestamp t) {
    using namespace std::chrono;
    auto day_count = t >= 0 ? t / 86400 : (t - 86399) / 86400;
    auto secs = t - day_count * 86400;
    year_month_day ymd{sys_days{days{day_count}}};
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                       secs / 3600, (secs / 60) % 60, secs % 60);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

Dataset parse_transactions(std::string_view csv_text) {
    auto lines = split_lines(csv_text);
    if (lines.empty()) throw ValidationError("line 1: missing CSV header");

    auto header = split_fields(lines.front());
    std::map<std::string, std::size_t, std::less<>> col;
    for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(header[i]), i);
    for (auto required : {"tx_id", "timestamp", "user_id", "terminal_id", "amount", "tx_type"})
        if (!col.contains(required))
            throw ValidationError(fmt::format("line 1: header lacks required column '{}'", required));
    auto label_col = col.contains("label") ? std::optional(col.at("label")) : std::nullopt;
    auto scenario_col = col.contains("scenario") ? std::optional(col.at("scenario")) : std::nullopt;

    std::vector<Transaction> rows;
    rows.reserve(lines.size() - 1);
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        auto line_no = ln + 1;
        auto fields = split_fields(lines[ln]);
        if (fields.size() != header.size())
            throw ValidationError(fmt::format("line {}: expected {} fields, found {}", line_no,
                                              header.size(), fields.size()));
        auto field = [&](const char* name) { return fields[col.at(name)]; };
        auto fail = [&](const char* name, std::string_view why) {
            return ValidationError(fmt::format("line {}: field '{}': {}", line_no, name, why));
        };

        Transaction tx;
        tx.tx_id = std::string(field("tx_id"));
        if (tx.tx_id.empty()) throw fail("tx_id", "empty");

        try {
            tx.timestamp = parse_timestamp(field("timestamp"));
        } catch (const ValidationError& e) {
            throw fail("timestamp", e.what());
        }
        if (tx.timestamp <= 0) throw fail("timestamp", "must be positive");

        tx.user_id = std::string(field("user_id"));
        tx.terminal_id = std::string(field("terminal_id"));

        auto amount_text = field("amount");
        if (amount_text.empty()) {
            tx.amount = kMissingAmount;
        } else {
            auto [p, ec] = std::from_chars(amount_text.data(), amount_text.data() + amount_text.size(),
                                           tx.amount);
            if (ec != std::errc{} || p != amount_text.data() + amount_text.size() ||
                !std::isfinite(tx.amount))
                throw fail("amount", fmt::format("not a number '{}'", amount_text));
            if (tx.amount < 0) throw fail("amount", fmt::format("negative value '{}'", amount_text));
        }

        try {
            tx.tx_type = parse_tx_type(field("tx_type"));
        } catch (const ValidationError& e) {
            throw fail("tx_type", e.what());
        }

        if (label_col) {
            auto l = fields[*label_col];
            if (l == "fraud" || l == "1")
                tx.label = Label::fraud;
            else if (l == "legit" || l == "0")
                tx.label = Label::legit;
            else if (!l.empty())
                throw fail("label", fmt::format("unknown label '{}'", l));
        }
        if (scenario_col) tx.scenario = std::string(fields[*scenario_col]);
        rows.push_back(std::move(tx));
    }
    return Dataset(std::move(rows));
}

Dataset read_transactions_file(const std::string& path) {
    return parse_transactions(read_file(path));
}

std::string serialize_transactions(std::span<const Transaction> rows) {
    bool with_scenario = std::any_of(rows.begin(), rows.end(),
                                     [](const Transaction& t) { return !t.scenario.empty(); });
    fmt::memory_buffer out;
    fmt::format_to(std::back_inserter(out), "tx_id,timestamp,user_id,terminal_id,amount,tx_type,label{}\n",
                   with_scenario ? ",scenario" : "");
    for (const auto& tx : rows) {
        fmt::format_to(std::back_inserter(out), "{},{},{},{},", tx.tx_id, tx.timestamp, tx.user_id,
                       tx.terminal_id);
        if (!std::isnan(tx.amount)) fmt::format_to(std::back_inserter(out), "{}", tx.amount);
        fmt::format_to(std::back_inserter(out), ",{},{}", to_string(tx.tx_type),
                       tx.label ? to_string(*tx.label) : std::string_view{});
        if (with_scenario) fmt::format_to(std::back_inserter(out), ",{}", tx.scenario);
        out.push_back('\n');
    }
    return fmt::to_string(out);
}

// ---------------------------------------------------------------------------
// Cleansing
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const CleanseReport& r) {
    j = nlohmann::json{{"duplicates_removed", r.duplicates_removed},
                       {"missing_dropped", r.missing_dropped},
                       {"outliers_removed", r.outliers_removed},
                       {"retained", r.retained}};
}

void from_json(const nlohmann::json& j, CleanseReport& r) {
    j.at("duplicates_removed").get_to(r.duplicates_removed);
    j.at("missing_dropped").get_to(r.missing_dropped);
    j.at("outliers_removed").get_to(r.outliers_removed);
    j.at("retained").get_to(r.retained);
}

double sorted_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    double pos = q * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

CleanseResult cleanse(const Dataset& d, const CleansePolicy& policy) {
    CleanseReport report;
    std::vector<const Transaction*> kept;
    kept.reserve(d.size());

    if (policy.dedup_key == DedupKey::tx_id) {
        std::unordered_set<std::string_view> seen;
        for (const auto& tx : d.rows()) {
            if (seen.insert(tx.tx_id).second)
                kept.push_back(&tx);
            else
                ++report.duplicates_removed;
        }
    } else {
        std::set<std::tuple<std::string_view, Timestamp, std::string, std::string_view>> seen;
        for (const auto& tx : d.rows()) {
            // amounts compared via their round-trip text so NaN keys compare equal
            auto key = std::make_tuple(std::string_view(tx.user_id), tx.timestamp,
                                       fmt::format("{}", tx.amount), std::string_view(tx.terminal_id));
            if (seen.insert(std::move(key)).second)
                kept.push_back(&tx);
            else
                ++report.duplicates_removed;
        }
    }

    std::erase_if(kept, [&](const Transaction* tx) {
        if (!tx->has_missing_fields()) return false;
        ++report.missing_dropped;
        return true;
    });

    if (policy.remove_outliers && kept.size() >= 4) {
        std::vector<double> amounts;
        amounts.reserve(kept.size());
        for (const auto* tx : kept) amounts.push_back(tx->amount);
        std::sort(amounts.begin(), amounts.end());
        double q1 = sorted_quantile(amounts, 0.25);
        double q3 = sorted_quantile(amounts, 0.75);
        double iqr = q3 - q1;
        double lo = q1 - policy.iqr_k * iqr;
        double hi = q3 + policy.iqr_k * iqr;
        std::erase_if(kept, [&](const Transaction* tx) {
            if (tx->amount >= lo && tx->amount <= hi) return false;
            ++report.outliers_removed;
            return true;
        });
    }

    std::vector<Transaction> rows;
    rows.reserve(kept.size());
    for (const auto* tx : kept) rows.push_back(*tx);
    report.retained = rows.size();
    return {Dataset(std::move(rows)), report};
}

// ---------------------------------------------------------------------------
// Segmentation / split
// ---------------------------------------------------------------------------

std::vector<TimeWindow> temporal_segment(const Dataset& d, std::int64_t window_seconds) {
    if (window_seconds <= 0) throw ValidationError("window_seconds must be positive");
    std::vector<TimeWindow> out;
    if (d.empty()) return out;
    auto rows = d.rows();
    auto t0 = d.meta().t_min;
    auto n_windows = (d.meta().t_max - t0) / window_seconds + 1;
    out.reserve(static_cast<std::size_t>(n_windows));
    std::size_t i = 0;
    for (std::int64_t k = 0; k < n_windows; ++k) {
        Timestamp start = t0 + k * window_seconds;
        Timestamp end = start + window_seconds;
        std::size_t j = i;
        while (j < rows.size() && rows[j].timestamp < end) ++j;
        out.push_back({start, end, rows.subspan(i, j - i)});
        i = j;
    }
    return out;
}

TemporalSplit temporal_split(const Dataset& d, double train_frac, double val_frac) {
    if (!(train_frac > 0) || !(val_frac > 0) || !(train_frac + val_frac < 1))
        throw ValidationError(fmt::format(
            "split fractions must satisfy 0 < train, 0 < val, train + val < 1 (got {}, {})", train_frac,
            val_frac));
    auto rows = d.rows();
    const auto n = rows.size();
    // Extends a cut past rows that share the timestamp of the row just before it.
    auto cut_at = [&](double frac, std::size_t floor_idx) {
        auto c = static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
        c = std::clamp(c, floor_idx, n);
        while (c > 0 && c < n && rows[c].timestamp == rows[c - 1].timestamp) ++c;
        return c;
    };
    auto c1 = cut_at(train_frac, 0);
    auto c2 = cut_at(train_frac + val_frac, c1);
    if (c1 == 0 || c2 == c1 || c2 == n)
        throw ValidationError(fmt::format(
            "dataset of {} rows cannot populate train/val/test under fractions ({}, {})", n, train_frac,
            val_frac));
    auto slice = [&](std::size_t a, std::size_t b) {
        return Dataset(std::vector<Transaction>(rows.begin() + static_cast<std::ptrdiff_t>(a),
                                                rows.begin() + static_cast<std::ptrdiff_t>(b)));
    };
    return {slice(0, c1), slice(c1, c2), slice(c2, n)};
}

}  // namespace timetrail
