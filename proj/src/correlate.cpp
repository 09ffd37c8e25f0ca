#include "timetrail/correlate.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "timetrail/error.hpp"

namespace timetrail {

namespace {

Coefficient finish(double cxy, double sxx, double syy) {
    if (!(sxx > 0) || !(syy > 0)) return std::nullopt;
    double r = cxy / std::sqrt(sxx * syy);
    if (!std::isfinite(r)) return std::nullopt;
    return std::clamp(r, -1.0, 1.0);
}

bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

}  // namespace

Coefficient pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ValidationError(fmt::format("pearson: length mismatch {} vs {}", x.size(), y.size()));
    const auto n = x.size();
    if (n < 2 || is_constant(x) || is_constant(y)) return std::nullopt;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // The 1/n factors of the population moments cancel.
    return finish(sxy, sxx, syy);
}

Coefficient pearson(const AttributeSeries& x, const AttributeSeries& y) { return pearson(x.values, y.values); }

void PearsonAccumulator::push(double x, double y) {
    if (n_ == 0) {
        first_x_ = x;
        first_y_ = y;
    } else {
        x_constant_ = x_constant_ && x == first_x_;
        y_constant_ = y_constant_ && y == first_y_;
    }
    ++n_;
    double inv = 1.0 / static_cast<double>(n_);
    double dx = x - mean_x_;
    double dy = y - mean_y_;
    mean_x_ += dx * inv;
    mean_y_ += dy * inv;
    m2_x_ += dx * (x - mean_x_);
    m2_y_ += dy * (y - mean_y_);
    c_xy_ += dx * (y - mean_y_);
}

Coefficient PearsonAccumulator::coefficient() const {
    if (n_ < 2 || x_constant_ || y_constant_) return std::nullopt;
    return finish(c_xy_, m2_x_, m2_y_);
}

double attribute_value(const EnrichedTransaction& row, std::string_view name) {
    if (name == "amount") return row.context.amount;
    const auto& names = TemporalAttributes::names();
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ValidationError(fmt::format("unknown attribute '{}'", name));
    return row.attrs.values()[static_cast<std::size_t>(it - names.begin())];
}

AttributeSeries attribute_series(std::span<const EnrichedTransaction> rows, std::string_view name) {
    AttributeSeries s{std::string(name), {}};
    s.values.reserve(rows.size());
    for (const auto& r : rows) s.values.push_back(attribute_value(r, name));
    return s;
}

CorrelationMatrix correlation_matrix(std::span<const EnrichedTransaction> rows,
                                     const std::vector<std::string>& attributes,
                                     std::optional<WindowInfo> window) {
    const auto k = attributes.size();
    std::vector<AttributeSeries> cols;
    cols.reserve(k);
    for (const auto& a : attributes) cols.push_back(attribute_series(rows, a));

    CorrelationMatrix m{attributes, std::vector<std::vector<Coefficient>>(k, std::vector<Coefficient>(k)), window};
    for (std::size_t i = 0; i < k; ++i) {
        bool defined = rows.size() >= 2 && !is_constant(cols[i].values);
        m.values[i][i] = defined ? Coefficient(1.0) : std::nullopt;
        for (std::size_t j = i + 1; j < k; ++j) {
            auto r = pearson(cols[i], cols[j]);
            m.values[i][j] = r;
            m.values[j][i] = r;
        }
    }
    return m;
}

DynamicCorrelationSeries dynamic_correlation(std::span<const EnrichedTransaction> rows,
                                             const std::pair<std::string, std::string>& pair,
                                             std::int64_t window_seconds, std::int64_t stride_seconds) {
    if (!(stride_seconds > 0) || window_seconds < stride_seconds)
        throw ValidationError(fmt::format("dynamic correlation requires window >= stride > 0 (got {}, {})",
                                          window_seconds, stride_seconds));
    DynamicCorrelationSeries out{pair, {}};
    if (rows.empty()) return out;
    auto x = attribute_series(rows, pair.first);
    auto y = attribute_series(rows, pair.second);
    const auto t_min = rows.front().base.timestamp;
    const auto t_max = rows.back().base.timestamp;

    std::size_t lo = 0;
    for (Timestamp start = t_min; start <= t_max; start += stride_seconds) {
        while (lo < rows.size() && rows[lo].base.timestamp < start) ++lo;
        PearsonAccumulator acc;
        for (std::size_t i = lo; i < rows.size() && rows[i].base.timestamp < start + window_seconds; ++i)
            acc.push(x.values[i], y.values[i]);
        out.points.emplace_back(start, acc.coefficient());
    }
    return out;
}

Coefficient window_aggregate_correlation(std::span<const EnrichedTransaction> rows,
                                         const std::pair<std::string, std::string>& pair,
                                         std::int64_t window_seconds) {
    if (window_seconds <= 0) throw ValidationError("window_seconds must be positive");
    std::vector<double> mx, my;
    std::size_t i = 0;
    while (i < rows.size()) {
        auto t0 = rows.front().base.timestamp;
        auto k = (rows[i].base.timestamp - t0) / window_seconds;
        double sx = 0, sy = 0;
        std::size_t n = 0;
        for (; i < rows.size() && (rows[i].base.timestamp - t0) / window_seconds == k; ++i, ++n) {
            sx += attribute_value(rows[i], pair.first);
            sy += attribute_value(rows[i], pair.second);
        }
        mx.push_back(sx / static_cast<double>(n));
        my.push_back(sy / static_cast<double>(n));
    }
    return pearson(mx, my);
}

std::vector<CorrelationMatrix> windowed_matrices(std::span<const EnrichedTransaction> rows,
                                                 const std::vector<std::string>& attributes,
                                                 std::int64_t window_seconds) {
    if (window_seconds <= 0) throw ValidationError("window_seconds must be positive");
    std::vector<CorrelationMatrix> out;
    if (rows.empty()) return out;
    const auto t0 = rows.front().base.timestamp;
    std::size_t i = 0;
    while (i < rows.size()) {
        auto k = (rows[i].base.timestamp - t0) / window_seconds;
        WindowInfo w{t0 + k * window_seconds, t0 + (k + 1) * window_seconds};
        auto j = i;
        while (j < rows.size() && rows[j].base.timestamp < w.end) ++j;
        out.push_back(correlation_matrix(rows.subspan(i, j - i), attributes, w));
        i = j;
    }
    return out;
}

void to_json(nlohmann::json& j, const CorrelationMatrix& m) {
    j = nlohmann::json::object();
    j["attributes"] = m.attribute_names;
    if (m.window)
        j["window"] = {{"start", m.window->start}, {"end", m.window->end}};
    else
        j["window"] = {{"id", "all"}};
    auto& vals = j["values"] = nlohmann::json::array();
    for (const auto& row : m.values) {
        auto r = nlohmann::json::array();
        for (const auto& c : row) r.push_back(c ? nlohmann::json(*c) : nlohmann::json(nullptr));
        vals.push_back(std::move(r));
    }
}

void from_json(const nlohmann::json& j, CorrelationMatrix& m) {
    j.at("attributes").get_to(m.attribute_names);
    const auto& w = j.at("window");
    if (w.contains("start"))
        m.window = WindowInfo{w.at("start").get<Timestamp>(), w.at("end").get<Timestamp>()};
    else
        m.window.reset();
    m.values.clear();
    for (const auto& row : j.at("values")) {
        auto& r = m.values.emplace_back();
        for (const auto& c : row) r.push_back(c.is_null() ? Coefficient{} : Coefficient(c.get<double>()));
    }
    if (m.values.size() != m.attribute_names.size())
        throw ValidationError("correlation matrix dimensions do not match attribute count");
}

std::string matrices_to_long_csv(std::span<const CorrelationMatrix> ms) {
    fmt::memory_buffer out;
    fmt::format_to(std::back_inserter(out), "attr_a,attr_b,window_start,coefficient\n");
    for (const auto& m : ms) {
        auto window = m.window ? fmt::format("{}", m.window->start) : std::string("all");
        for (std::size_t i = 0; i < m.attribute_names.size(); ++i)
            for (std::size_t j = 0; j < m.attribute_names.size(); ++j) {
                fmt::format_to(std::back_inserter(out), "{},{},{},", m.attribute_names[i], m.attribute_names[j],
                               window);
                if (m.values[i][j]) fmt::format_to(std::back_inserter(out), "{}", *m.values[i][j]);
                out.push_back('\n');
            }
    }
    return fmt::to_string(out);
}

std::string series_to_csv(const DynamicCorrelationSeries& s) {
    fmt::memory_buffer out;
    fmt::format_to(std::back_inserter(out), "attr_a,attr_b,window_start,coefficient\n");
    for (const auto& [t, c] : s.points) {
        fmt::format_to(std::back_inserter(out), "{},{},{},", s.pair.first, s.pair.second, t);
        if (c) fmt::format_to(std::back_inserter(out), "{}", *c);
        out.push_back('\n');
    }
    return fmt::to_string(out);
}

}  // namespace timetrail
