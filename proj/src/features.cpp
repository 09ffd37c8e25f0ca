#include "timetrail/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "timetrail/error.hpp"

namespace timetrail {

FeatureTable::FeatureTable(std::vector<std::string> feature_names, std::vector<double> values,
                           std::optional<std::vector<int>> labels, std::vector<std::string> row_ids)
    : names_(std::move(feature_names)),
      values_(std::move(values)),
      labels_(std::move(labels)),
      row_ids_(std::move(row_ids)) {
    if (names_.empty()) {
        if (!values_.empty()) throw ValidationError("feature table has values but no features");
        n_rows_ = labels_ ? labels_->size() : row_ids_.size();
    } else {
        if (values_.size() % names_.size() != 0)
            throw ValidationError("feature table is not rectangular");
        n_rows_ = values_.size() / names_.size();
    }
    if (labels_ && labels_->size() != n_rows_)
        throw ValidationError(
            fmt::format("label count {} does not match row count {}", labels_->size(), n_rows_));
    if (!row_ids_.empty() && row_ids_.size() != n_rows_)
        throw ValidationError(
            fmt::format("row id count {} does not match row count {}", row_ids_.size(), n_rows_));
}

std::vector<double> FeatureTable::column(std::size_t j) const {
    std::vector<double> c(n_rows_);
    for (std::size_t i = 0; i < n_rows_; ++i) c[i] = at(i, j);
    return c;
}

std::optional<std::size_t> FeatureTable::index_of(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> indices) const {
    std::vector<double> vals;
    vals.reserve(indices.size() * names_.size());
    std::optional<std::vector<int>> labels;
    if (labels_) labels.emplace().reserve(indices.size());
    std::vector<std::string> ids;
    for (auto i : indices) {
        auto r = row(i);
        vals.insert(vals.end(), r.begin(), r.end());
        if (labels_) labels->push_back((*labels_)[i]);
        if (!row_ids_.empty()) ids.push_back(row_ids_[i]);
    }
    return FeatureTable(names_, std::move(vals), std::move(labels), std::move(ids));
}

void check_schema(const std::vector<std::string>& want, const std::vector<std::string>& have) {
    std::set<std::string> w(want.begin(), want.end());
    std::set<std::string> h(have.begin(), have.end());
    std::vector<std::string> missing, extra;
    std::set_difference(w.begin(), w.end(), h.begin(), h.end(), std::back_inserter(missing));
    std::set_difference(h.begin(), h.end(), w.begin(), w.end(), std::back_inserter(extra));
    if (!missing.empty() || !extra.empty())
        throw ValidationError(fmt::format("feature schema mismatch: missing [{}], extra [{}]",
                                          fmt::join(missing, ", "), fmt::join(extra, ", ")));
}

FeatureTable FeatureTable::reorder_columns(const std::vector<std::string>& names) const {
    check_schema(names, names_);
    if (names == names_) return *this;
    std::vector<std::size_t> src(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) src[j] = *index_of(names[j]);
    std::vector<double> vals(values_.size());
    for (std::size_t i = 0; i < n_rows_; ++i)
        for (std::size_t j = 0; j < names.size(); ++j) vals[i * names.size() + j] = at(i, src[j]);
    return FeatureTable(names, std::move(vals), labels_, row_ids_);
}

void to_json(nlohmann::json& j, const ScalerParams& p) {
    j = nlohmann::json::object();
    j["feature_names"] = p.feature_names;
    auto& ranges = j["ranges"] = nlohmann::json::array();
    for (const auto& r : p.ranges) ranges.push_back({{"min", r.min}, {"max", r.max}});
}

void from_json(const nlohmann::json& j, ScalerParams& p) {
    j.at("feature_names").get_to(p.feature_names);
    p.ranges.clear();
    for (const auto& r : j.at("ranges")) p.ranges.push_back({r.at("min").get<double>(), r.at("max").get<double>()});
    if (p.ranges.size() != p.feature_names.size())
        throw ValidationError("scaler has mismatched feature and range counts");
}

ScalerParams fit_scaler(const FeatureTable& train) {
    if (train.n_rows() == 0) throw ValidationError("cannot fit scaler on an empty table");
    ScalerParams p;
    p.feature_names = train.feature_names();
    p.ranges.assign(train.n_features(), FeatureRange{std::numeric_limits<double>::infinity(),
                                                     -std::numeric_limits<double>::infinity()});
    for (std::size_t i = 0; i < train.n_rows(); ++i) {
        for (std::size_t j = 0; j < train.n_features(); ++j) {
            double v = train.at(i, j);
            if (!std::isfinite(v))
                throw ValidationError(
                    fmt::format("non-finite value in feature '{}' at row {}", p.feature_names[j], i));
            p.ranges[j].min = std::min(p.ranges[j].min, v);
            p.ranges[j].max = std::max(p.ranges[j].max, v);
        }
    }
    return p;
}

FeatureTable apply_scaler(const ScalerParams& params, const FeatureTable& t) {
    auto ordered = t.reorder_columns(params.feature_names);
    std::vector<double> vals(ordered.values().begin(), ordered.values().end());
    const auto k = params.feature_names.size();
    for (std::size_t idx = 0; idx < vals.size(); ++idx) {
        const auto& r = params.ranges[idx % k];
        double span = r.max - r.min;
        vals[idx] = span > 0 ? std::clamp((vals[idx] - r.min) / span, 0.0, 1.0) : 0.0;
    }
    return FeatureTable(params.feature_names, std::move(vals), ordered.labels(), ordered.row_ids());
}

}  // namespace timetrail
