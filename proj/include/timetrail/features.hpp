#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace timetrail {

// Dense row-major numeric table. `labels` (1 = fraud) and `row_ids` are
// optional; when present they have one entry per row.
class FeatureTable {
public:
    FeatureTable() = default;
    FeatureTable(std::vector<std::string> feature_names, std::vector<double> values,
                 std::optional<std::vector<int>> labels = std::nullopt,
                 std::vector<std::string> row_ids = {});

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_features() const { return names_.size(); }
    const std::vector<std::string>& feature_names() const { return names_; }
    const std::optional<std::vector<int>>& labels() const { return labels_; }
    const std::vector<std::string>& row_ids() const { return row_ids_; }
    std::span<const double> values() const { return values_; }

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values_).subspan(i * names_.size(), names_.size());
    }
    double at(std::size_t i, std::size_t j) const { return values_[i * names_.size() + j]; }
    std::vector<double> column(std::size_t j) const;

    std::optional<std::size_t> index_of(std::string_view name) const;

    // Rows in the given order (indices may repeat).
    FeatureTable select_rows(std::span<const std::size_t> indices) const;

    // Same rows with columns rearranged to `names`; throws ValidationError
    // listing every missing and extra feature.
    FeatureTable reorder_columns(const std::vector<std::string>& names) const;

private:
    std::vector<std::string> names_;
    std::vector<double> values_;
    std::size_t n_rows_ = 0;
    std::optional<std::vector<int>> labels_;
    std::vector<std::string> row_ids_;
};

// Throws ValidationError if `have` and `want` differ as sets, naming the
// missing and extra features.
void check_schema(const std::vector<std::string>& want, const std::vector<std::string>& have);

struct FeatureRange {
    double min = 0.0;
    double max = 0.0;
};

struct ScalerParams {
    std::vector<std::string> feature_names;
    std::vector<FeatureRange> ranges;
};

void to_json(nlohmann::json& j, const ScalerParams& p);
void from_json(const nlohmann::json& j, ScalerParams& p);

// Fit on training rows only. Throws ValidationError on an empty table or a
// non-finite value.
ScalerParams fit_scaler(const FeatureTable& train);

// (x - min) / (max - min), clipped to [0, 1]. A feature with max == min maps
// to 0.0. Columns are matched by name.
FeatureTable apply_scaler(const ScalerParams& params, const FeatureTable& t);

}  // namespace timetrail
