#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "timetrail/domain.hpp"
#include "timetrail/enrich.hpp"

namespace timetrail {

// A Pearson coefficient in [-1, 1], or nullopt when undefined (fewer than two
// points, or a constant series).
using Coefficient = std::optional<double>;

struct AttributeSeries {
    std::string attribute_name;
    std::vector<double> values;
};

// Definitional two-pass Pearson with population moments:
// cov(x, y) / (sd(x) * sd(y)). Throws ValidationError on length mismatch.
Coefficient pearson(std::span<const double> x, std::span<const double> y);
Coefficient pearson(const AttributeSeries& x, const AttributeSeries& y);

// One-pass streaming Pearson over centered co-moments (Welford updates).
// Constancy is tracked exactly, so constant input is always undefined
// regardless of rounding in the running means.
class PearsonAccumulator {
public:
    void push(double x, double y);
    std::size_t count() const { return n_; }
    Coefficient coefficient() const;

private:
    std::size_t n_ = 0;
    double mean_x_ = 0.0;
    double mean_y_ = 0.0;
    double m2_x_ = 0.0;
    double m2_y_ = 0.0;
    double c_xy_ = 0.0;
    double first_x_ = 0.0;
    double first_y_ = 0.0;
    bool x_constant_ = true;
    bool y_constant_ = true;
};

// Attribute lookup over enriched rows: any temporal attribute name or "amount".
double attribute_value(const EnrichedTransaction& row, std::string_view name);
AttributeSeries attribute_series(std::span<const EnrichedTransaction> rows, std::string_view name);

struct WindowInfo {
    Timestamp start = 0;
    Timestamp end = 0;  // exclusive

    friend bool operator==(const WindowInfo&, const WindowInfo&) = default;
};

struct CorrelationMatrix {
    std::vector<std::string> attribute_names;
    std::vector<std::vector<Coefficient>> values;
    std::optional<WindowInfo> window;  // nullopt: whole dataset

    friend bool operator==(const CorrelationMatrix&, const CorrelationMatrix&) = default;
};

struct DynamicCorrelationSeries {
    std::pair<std::string, std::string> pair;
    std::vector<std::pair<Timestamp, Coefficient>> points;
};

// Pairwise Pearson over every attribute pair; symmetric, diagonal 1.0 or
// undefined for a constant attribute.
CorrelationMatrix correlation_matrix(std::span<const EnrichedTransaction> rows,
                                     const std::vector<std::string>& attributes,
                                     std::optional<WindowInfo> window = std::nullopt);

// Sliding windows [t_min + k*stride, t_min + k*stride + window) for every k
// whose start is <= t_max. Each point is the streaming coefficient over the
// rows in that window, accumulated in row order.
DynamicCorrelationSeries dynamic_correlation(std::span<const EnrichedTransaction> rows,
                                             const std::pair<std::string, std::string>& pair,
                                             std::int64_t window_seconds, std::int64_t stride_seconds);

// Window-aggregate interpretation: Pearson across per-window means of the
// two attributes (empty windows skipped).
Coefficient window_aggregate_correlation(std::span<const EnrichedTransaction> rows,
                                         const std::pair<std::string, std::string>& pair,
                                         std::int64_t window_seconds);

// Tumbling-window matrices, one per non-empty window.
std::vector<CorrelationMatrix> windowed_matrices(std::span<const EnrichedTransaction> rows,
                                                 const std::vector<std::string>& attributes,
                                                 std::int64_t window_seconds);

void to_json(nlohmann::json& j, const CorrelationMatrix& m);
void from_json(const nlohmann::json& j, CorrelationMatrix& m);

// Long form `attr_a,attr_b,window_start,coefficient`; undefined is an empty
// field and the whole-dataset window is written as `all`.
std::string matrices_to_long_csv(std::span<const CorrelationMatrix> ms);
std::string series_to_csv(const DynamicCorrelationSeries& s);

}  // namespace timetrail
