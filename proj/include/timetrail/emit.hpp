#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "timetrail/correlate.hpp"
#include "timetrail/domain.hpp"
#include "timetrail/explain.hpp"

namespace timetrail {

// Plot data is the primary output; every SVG is a rendering of the same
// data and is byte-identical for identical input.

struct Rgb {
    int r = 0, g = 0, b = 0;
    std::string hex() const;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kColdAnchor{59, 76, 192};      // -1
inline constexpr Rgb kNeutralAnchor{240, 240, 240};  // 0
inline constexpr Rgb kHotAnchor{180, 4, 38};         // +1

// Linear blend toward the cold or hot anchor; input clamped to [-1, 1].
Rgb diverging_color(double v);

struct HeatmapSpec {
    std::string title;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<Coefficient>> values;  // [row][col]

    friend bool operator==(const HeatmapSpec&, const HeatmapSpec&) = default;
};

HeatmapSpec heatmap_data(const CorrelationMatrix& m);

// Wide CSV: header `attribute,<col...>`, one line per row, undefined empty.
std::string heatmap_csv(const HeatmapSpec& h);
HeatmapSpec parse_heatmap_csv(std::string_view csv, std::string title = {});
void to_json(nlohmann::json& j, const HeatmapSpec& h);
void from_json(const nlohmann::json& j, HeatmapSpec& h);
// One `<rect class="cell">` per entry; undefined cells use a hatch pattern.
std::string heatmap_svg(const HeatmapSpec& h);

struct SeriesPoint {
    Timestamp window_start = 0;
    double value = 0.0;
    friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

struct TimeSeriesSpec {
    std::string name;
    std::vector<SeriesPoint> points;   // one per window, strictly increasing starts
    std::vector<SeriesPoint> overlay;  // windows holding labeled fraud, with the count
    friend bool operator==(const TimeSeriesSpec&, const TimeSeriesSpec&) = default;
};

// Flagged rows per tumbling window; windows are those of temporal_segment.
// `flags` has one entry per row of `d`.
TimeSeriesSpec flagged_frequency_series(const Dataset& d, std::span<const int> flags, std::int64_t window_seconds);

// `window_start,flagged,fraud`
std::string series_csv(const TimeSeriesSpec& s);
TimeSeriesSpec parse_series_csv(std::string_view csv, std::string name = {});
std::string series_svg(const TimeSeriesSpec& s);

// Bias node followed by one `<g class="node">` per step, in order.
std::string sequence_svg(const ExplanationSequence& s);
std::string sequence_json(const ExplanationSequence& s);

struct Histogram {
    std::vector<double> edges;  // bins + 1 uniform edges over [0, 1]
    std::vector<std::size_t> counts;
};

// Half-open bins except the last, which is closed at 1. Throws
// ValidationError when bins < 1.
Histogram histogram(std::span<const double> values, std::size_t bins);
Histogram tis_histogram(const TISReport& r, std::size_t bins);

// `bin_start,bin_end,count`
std::string histogram_csv(const Histogram& h);
std::string histogram_svg(const Histogram& h, std::string_view title);

}  // namespace timetrail
