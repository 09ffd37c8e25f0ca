#include "timetrail/emit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "timetrail/error.hpp"
#include "timetrail/text.hpp"

namespace timetrail {

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string svg_open(double width, double height) {
    return fmt::format(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n",
        width, height);
}

std::string text_el(double x, double y, std::string_view body, std::string_view anchor = "start") {
    return fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"{}\">{}</text>\n", x, y, anchor, xml_escape(body));
}

double parse_number(std::string_view s, std::string_view what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ValidationError(fmt::format("{}: bad number '{}'", what, s));
    return v;
}

int blend(int a, int b, double t) { return static_cast<int>(std::lround(a + (b - a) * t)); }

}  // namespace

std::string Rgb::hex() const { return fmt::format("#{:02x}{:02x}{:02x}", r, g, b); }

Rgb diverging_color(double v) {
    v = std::clamp(v, -1.0, 1.0);
    const Rgb& far = v < 0 ? kColdAnchor : kHotAnchor;
    double t = std::abs(v);
    return {blend(kNeutralAnchor.r, far.r, t), blend(kNeutralAnchor.g, far.g, t), blend(kNeutralAnchor.b, far.b, t)};
}

// ---------------------------------------------------------------------------
// Heatmap
// ---------------------------------------------------------------------------

HeatmapSpec heatmap_data(const CorrelationMatrix& m) {
    HeatmapSpec h;
    h.title = m.window ? fmt::format("window {} - {}", format_iso8601(m.window->start), format_iso8601(m.window->end))
                       : std::string("all rows");
    h.row_labels = m.attribute_names;
    h.col_labels = m.attribute_names;
    h.values = m.values;
    return h;
}

std::string heatmap_csv(const HeatmapSpec& h) {
    std::string out = "attribute";
    for (const auto& c : h.col_labels) out += "," + c;
    out += '\n';
    for (std::size_t i = 0; i < h.row_labels.size(); ++i) {
        out += h.row_labels[i];
        for (const auto& v : h.values[i]) out += v ? fmt::format(",{}", *v) : std::string(",");
        out += '\n';
    }
    return out;
}

HeatmapSpec parse_heatmap_csv(std::string_view csv, std::string title) {
    auto lines = split_lines(csv);
    if (lines.empty()) throw ValidationError("heatmap csv: missing header");
    HeatmapSpec h;
    h.title = std::move(title);
    auto header = split_fields(lines[0]);
    for (std::size_t k = 1; k < header.size(); ++k) h.col_labels.emplace_back(header[k]);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto fields = split_fields(lines[i]);
        if (fields.size() != header.size())
            throw ValidationError(fmt::format("heatmap csv line {}: expected {} fields", i + 1, header.size()));
        h.row_labels.emplace_back(fields[0]);
        auto& row = h.values.emplace_back();
        for (std::size_t k = 1; k < fields.size(); ++k)
            row.push_back(fields[k].empty() ? Coefficient{} : Coefficient{parse_number(fields[k], "heatmap csv")});
    }
    return h;
}

void to_json(nlohmann::json& j, const HeatmapSpec& h) {
    auto values = nlohmann::json::array();
    for (const auto& row : h.values) {
        auto r = nlohmann::json::array();
        for (const auto& v : row) r.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
        values.push_back(std::move(r));
    }
    j = nlohmann::json{{"title", h.title},
                       {"row_labels", h.row_labels},
                       {"col_labels", h.col_labels},
                       {"values", std::move(values)},
                       {"scale", {{"min", -1.0}, {"mid", 0.0}, {"max", 1.0},
                                  {"cold", kColdAnchor.hex()}, {"neutral", kNeutralAnchor.hex()},
                                  {"hot", kHotAnchor.hex()}, {"undefined", "hatched"}}}};
}

void from_json(const nlohmann::json& j, HeatmapSpec& h) {
    j.at("title").get_to(h.title);
    j.at("row_labels").get_to(h.row_labels);
    j.at("col_labels").get_to(h.col_labels);
    h.values.clear();
    for (const auto& r : j.at("values")) {
        auto& row = h.values.emplace_back();
        for (const auto& v : r) row.push_back(v.is_null() ? Coefficient{} : Coefficient{v.get<double>()});
    }
}

std::string heatmap_svg(const HeatmapSpec& h) {
    constexpr double cell = 36.0, left = 190.0, top = 40.0, bottom_labels = 190.0;
    const double width = left + cell * static_cast<double>(h.col_labels.size()) + 20.0;
    const double height = top + cell * static_cast<double>(h.row_labels.size()) + bottom_labels;
    std::string out = svg_open(width, height);
    out += "<defs><pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"6\" height=\"6\">"
           "<path d=\"M0,6 L6,0\" stroke=\"#777777\" stroke-width=\"1\"/></pattern></defs>\n";
    out += text_el(left, 20.0, h.title);
    for (std::size_t i = 0; i < h.row_labels.size(); ++i) {
        const double y = top + cell * static_cast<double>(i);
        out += text_el(left - 6.0, y + cell / 2 + 4, h.row_labels[i], "end");
        for (std::size_t k = 0; k < h.col_labels.size(); ++k) {
            const double x = left + cell * static_cast<double>(k);
            const auto& v = h.values[i][k];
            auto fill = v ? diverging_color(*v).hex() : std::string("url(#hatch)");
            auto tip = v ? fmt::format("{} / {}: {:.4f}", h.row_labels[i], h.col_labels[k], *v)
                         : fmt::format("{} / {}: undefined", h.row_labels[i], h.col_labels[k]);
            out += fmt::format(
                "<rect class=\"cell\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\" "
                "stroke=\"#ffffff\"><title>{}</title></rect>\n",
                x, y, cell, cell, fill, xml_escape(tip));
        }
    }
    const double label_y = top + cell * static_cast<double>(h.row_labels.size()) + 8.0;
    for (std::size_t k = 0; k < h.col_labels.size(); ++k) {
        const double x = left + cell * static_cast<double>(k) + cell / 2;
        out += fmt::format("<text x=\"{0:.2f}\" y=\"{1:.2f}\" transform=\"rotate(60 {0:.2f} {1:.2f})\">{2}</text>\n", x,
                           label_y, xml_escape(h.col_labels[k]));
    }
    out += "</svg>\n";
    return out;
}

// ---------------------------------------------------------------------------
// Flag frequency series
// ---------------------------------------------------------------------------

TimeSeriesSpec flagged_frequency_series(const Dataset& d, std::span<const int> flags, std::int64_t window_seconds) {
    if (flags.size() != d.size())
        throw ValidationError(fmt::format("flag count {} does not match {} rows", flags.size(), d.size()));
    TimeSeriesSpec s;
    s.name = "flagged transactions";
    const auto* base = d.rows().data();
    for (const auto& w : temporal_segment(d, window_seconds)) {
        auto first = static_cast<std::size_t>(w.rows.data() - base);
        double flagged = 0.0, fraud = 0.0;
        for (std::size_t i = first; i < first + w.rows.size(); ++i) {
            flagged += flags[i] != 0 ? 1.0 : 0.0;
            fraud += d[i].is_fraud() ? 1.0 : 0.0;
        }
        s.points.push_back({w.start, flagged});
        if (fraud > 0) s.overlay.push_back({w.start, fraud});
    }
    return s;
}

std::string series_csv(const TimeSeriesSpec& s) {
    std::string out = "window_start,flagged,fraud\n";
    std::size_t k = 0;
    for (const auto& p : s.points) {
        double fraud = 0.0;
        while (k < s.overlay.size() && s.overlay[k].window_start < p.window_start) ++k;
        if (k < s.overlay.size() && s.overlay[k].window_start == p.window_start) fraud = s.overlay[k].value;
        out += fmt::format("{},{},{}\n", p.window_start, p.value, fraud);
    }
    return out;
}

TimeSeriesSpec parse_series_csv(std::string_view csv, std::string name) {
    auto lines = split_lines(csv);
    if (lines.empty() || lines[0] != "window_start,flagged,fraud")
        throw ValidationError("series csv: expected header window_start,flagged,fraud");
    TimeSeriesSpec s;
    s.name = std::move(name);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto f = split_fields(lines[i]);
        if (f.size() != 3) throw ValidationError(fmt::format("series csv line {}: expected 3 fields", i + 1));
        auto start = parse_timestamp(f[0]);
        s.points.push_back({start, parse_number(f[1], "series csv")});
        double fraud = parse_number(f[2], "series csv");
        if (fraud > 0) s.overlay.push_back({start, fraud});
    }
    return s;
}

std::string series_svg(const TimeSeriesSpec& s) {
    constexpr double width = 900, height = 320, left = 50, right = 20, top = 30, bottom = 40;
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    double peak = 1.0;
    for (const auto& p : s.points) peak = std::max(peak, p.value);
    for (const auto& p : s.overlay) peak = std::max(peak, p.value);
    const auto n = s.points.size();
    auto x_at = [&](std::size_t i) { return left + (n > 1 ? plot_w * static_cast<double>(i) / (n - 1) : plot_w / 2); };
    auto y_at = [&](double v) { return top + plot_h * (1.0 - v / peak); };

    std::string out = svg_open(width, height);
    out += text_el(left, 18.0, s.name);
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#333333\"/>\n", left,
                       top + plot_h, left + plot_w);
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#333333\"/>\n", left,
                       top, top + plot_h);
    out += text_el(left - 6, top + 4, fmt::format("{:g}", peak), "end");
    out += text_el(left - 6, top + plot_h + 4, "0", "end");
    if (n > 0) {
        out += text_el(left, height - 12, format_iso8601(s.points.front().window_start));
        out += text_el(left + plot_w, height - 12, format_iso8601(s.points.back().window_start), "end");
        out += "<polyline class=\"series\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < n; ++i)
            out += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", x_at(i), y_at(s.points[i].value));
        out += "\"/>\n";
    }
    std::size_t k = 0;
    for (const auto& m : s.overlay) {
        while (k < n && s.points[k].window_start < m.window_start) ++k;
        if (k == n) break;
        out += fmt::format("<circle class=\"fraud\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"#d62728\"/>\n", x_at(k),
                           y_at(m.value));
    }
    out += "</svg>\n";
    return out;
}

// ---------------------------------------------------------------------------
// Explanation sequence
// ---------------------------------------------------------------------------

std::string sequence_svg(const ExplanationSequence& s) {
    constexpr double width = 560, row_h = 26, top = 40;
    const double height = top + row_h * static_cast<double>(s.steps.size() + 1) + 50;
    std::string out = svg_open(width, height);
    out += text_el(10, 18, fmt::format("transaction {}: p = {:.4f}, margin = {:.4f}, TIS = {:.4f}", s.tx_id,
                                       s.probability, s.margin, s.tis));
    auto node = [&](std::size_t i, std::string_view label, double delta, bool is_bias) {
        const double y = top + row_h * static_cast<double>(i);
        std::string fill = is_bias ? "#dddddd" : (delta >= 0 ? "#f4a582" : "#92c5de");
        return fmt::format(
            "<g class=\"node\"><rect x=\"10\" y=\"{0:.2f}\" width=\"540\" height=\"{1:.2f}\" rx=\"3\" fill=\"{2}\"/>"
            "<text x=\"16\" y=\"{3:.2f}\">{4}</text></g>\n",
            y, row_h - 4, fill, y + row_h / 2 + 2, xml_escape(label));
    };
    out += node(0, fmt::format("bias {:+.6f}", s.bias), s.bias, true);
    double running = s.bias;
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
        const auto& st = s.steps[i];
        running += st.delta;
        auto label = fmt::format("tree {} depth {}: {} {} {:.6g} -> {:+.6f} (running {:+.6f})", st.tree, st.depth,
                                 st.feature, st.branch == Branch::left ? "<" : ">=", st.threshold, st.delta, running);
        out += node(i + 1, label, st.delta, false);
    }
    out += text_el(10, height - 20, fmt::format("margin {:+.6f}", s.margin));
    out += "</svg>\n";
    return out;
}

std::string sequence_json(const ExplanationSequence& s) {
    nlohmann::json j = s;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Histogram
// ---------------------------------------------------------------------------

Histogram histogram(std::span<const double> values, std::size_t bins) {
    if (bins < 1) throw ValidationError("histogram needs at least one bin");
    Histogram h;
    h.edges.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) h.edges[k] = static_cast<double>(k) / static_cast<double>(bins);
    h.counts.assign(bins, 0);
    for (double v : values) {
        v = std::clamp(v, 0.0, 1.0);
        auto k = static_cast<std::size_t>(std::upper_bound(h.edges.begin(), h.edges.end(), v) - h.edges.begin()) - 1;
        ++h.counts[std::min(k, bins - 1)];
    }
    return h;
}

Histogram tis_histogram(const TISReport& r, std::size_t bins) {
    std::vector<double> scores;
    scores.reserve(r.per_tx.size());
    for (const auto& t : r.per_tx) scores.push_back(t.tis);
    return histogram(scores, bins);
}

std::string histogram_csv(const Histogram& h) {
    std::string out = "bin_start,bin_end,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k)
        out += fmt::format("{},{},{}\n", h.edges[k], h.edges[k + 1], h.counts[k]);
    return out;
}

std::string histogram_svg(const Histogram& h, std::string_view title) {
    constexpr double width = 600, height = 320, left = 50, right = 20, top = 30, bottom = 40;
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    std::size_t peak = 1;
    for (auto c : h.counts) peak = std::max(peak, c);
    const double bar_w = h.counts.empty() ? 0.0 : plot_w / static_cast<double>(h.counts.size());
    std::string out = svg_open(width, height);
    out += text_el(left, 18, title);
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        const double bh = plot_h * static_cast<double>(h.counts[k]) / static_cast<double>(peak);
        out += fmt::format(
            "<rect class=\"bar\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"#4c72b0\" "
            "stroke=\"#ffffff\"><title>[{}, {}{}: {}</title></rect>\n",
            left + bar_w * static_cast<double>(k), top + plot_h - bh, bar_w, bh, h.edges[k], h.edges[k + 1],
            k + 1 == h.counts.size() ? "]" : ")", h.counts[k]);
    }
    out += text_el(left, height - 12, "0");
    out += text_el(left + plot_w, height - 12, "1", "end");
    out += text_el(left - 6, top + 4, std::to_string(peak), "end");
    out += "</svg>\n";
    return out;
}

}  // namespace timetrail
