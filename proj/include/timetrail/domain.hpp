#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace timetrail {

using Timestamp = std::int64_t;  // seconds since Unix epoch, UTC

enum class TxType { purchase, withdrawal, transfer, deposit };
enum class Label { legit, fraud };

std::string_view to_string(TxType t);
std::string_view to_string(Label l);
TxType parse_tx_type(std::string_view s);  // throws ValidationError

inline constexpr double kMissingAmount = std::numeric_limits<double>::quiet_NaN();

struct Transaction {
    std::string tx_id;
    Timestamp timestamp = 0;
    std::string user_id;
    std::string terminal_id;
    double amount = 0.0;  // kMissingAmount when the source field was empty
    TxType tx_type = TxType::purchase;
    std::optional<Label> label;
    // Auxiliary generator column; empty for real or legit rows.
    std::string scenario;

    bool is_fraud() const { return label == Label::fraud; }
    bool has_missing_fields() const;

    friend bool operator==(const Transaction& a, const Transaction& b);
};

struct DatasetMeta {
    std::size_t row_count = 0;
    std::size_t labeled_count = 0;
    std::size_t fraud_count = 0;
    std::optional<double> fraud_rate;  // present only when every row is labeled
    Timestamp t_min = 0;
    Timestamp t_max = 0;
};

// Immutable, time-ordered collection of transactions. Rows are always sorted
// non-decreasing by (timestamp, tx_id); construction sorts stably, so rows
// with an identical key keep their input order.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<Transaction> rows);

    std::span<const Transaction> rows() const { return rows_; }
    const Transaction& operator[](std::size_t i) const { return rows_[i]; }
    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    const DatasetMeta& meta() const { return meta_; }

    friend bool operator==(const Dataset& a, const Dataset& b) { return a.rows_ == b.rows_; }

private:
    std::vector<Transaction> rows_;
    DatasetMeta meta_;
};

// Accepts `YYYY-MM-DDTHH:MM:SSZ` or integer epoch seconds.
Timestamp parse_timestamp(std::string_view s);
std::string format_iso8601(Timestamp t);

// CSV ingestion. Header required; columns are matched by name, `label` and
// `scenario` are optional, unknown columns are ignored. Errors carry the
// 1-based line number and the offending field name.
Dataset parse_transactions(std::string_view csv_text);
Dataset read_transactions_file(const std::string& path);

// Emits epoch timestamps and shortest round-trip amounts. The `scenario`
// column is written only when some row carries a tag.
std::string serialize_transactions(std::span<const Transaction> rows);
inline std::string serialize_transactions(const Dataset& d) { return serialize_transactions(d.rows()); }

// ---------------------------------------------------------------------------
// Cleansing
// ---------------------------------------------------------------------------

enum class DedupKey {
    tx_id,
    composite,  // (user_id, timestamp, amount, terminal_id) for id-less feeds
};

struct CleansePolicy {
    DedupKey dedup_key = DedupKey::tx_id;
    bool remove_outliers = true;
    double iqr_k = 3.0;
};

struct CleanseReport {
    std::size_t duplicates_removed = 0;
    std::size_t missing_dropped = 0;
    std::size_t outliers_removed = 0;
    std::size_t retained = 0;
};

void to_json(nlohmann::json& j, const CleanseReport& r);
void from_json(const nlohmann::json& j, CleanseReport& r);

struct CleanseResult {
    Dataset data;
    CleanseReport report;
};

// Order: dedup (first occurrence wins), then rows with missing mandatory
// fields, then amount outliers outside [Q1 - k*IQR, Q3 + k*IQR].
// Quartiles use linear interpolation between closest ranks.
CleanseResult cleanse(const Dataset& d, const CleansePolicy& policy = {});

// Linear-interpolation quantile of an ascending-sorted sample.
double sorted_quantile(std::span<const double> sorted, double q);

// ---------------------------------------------------------------------------
// Temporal segmentation and splitting
// ---------------------------------------------------------------------------

struct TimeWindow {
    Timestamp start = 0;
    Timestamp end = 0;  // exclusive
    std::span<const Transaction> rows;
};

// Half-open windows [t_min + k*w, t_min + (k+1)*w) covering [t_min, t_max],
// empty ones included. The returned spans view into `d`.
std::vector<TimeWindow> temporal_segment(const Dataset& d, std::int64_t window_seconds);

struct TemporalSplit {
    Dataset train;
    Dataset val;
    Dataset test;
};

// Cuts at row-count quantiles of the time order. Rows sharing the timestamp
// at a cut go to the earlier part. Throws ValidationError when any part would
// be empty.
TemporalSplit temporal_split(const Dataset& d, double train_frac, double val_frac);

}  // namespace timetrail
