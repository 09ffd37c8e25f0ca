#include "timetrail/explain.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "timetrail/error.hpp"

namespace timetrail {

namespace {

// Walks every tree, calling visit(tree_index, depth, node, child) per step.
template <typename Visit>
double walk_paths(const Ensemble& m, std::span<const double> row, Visit visit) {
    double bias = m.base_score;
    for (std::size_t t = 0; t < m.trees.size(); ++t) {
        const auto& nodes = m.trees[t].nodes;
        bias += m.learning_rate * nodes[0].value;
        std::size_t i = 0;
        int depth = 0;
        while (!nodes[i].is_leaf()) {
            const auto& n = nodes[i];
            auto child = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
            visit(static_cast<int>(t), depth, n, nodes[child]);
            i = child;
            ++depth;
        }
    }
    return bias;
}

}  // namespace

Attribution attribute_prediction(const Ensemble& m, std::span<const double> row) {
    if (row.size() != m.feature_names.size())
        throw ValidationError("attribute_prediction: row width does not match the model schema");
    std::vector<double> per_feature(m.feature_names.size(), 0.0);
    std::vector<char> touched(m.feature_names.size(), 0);
    Attribution a;
    a.bias = walk_paths(m, row, [&](int, int, const TreeNode& node, const TreeNode& child) {
        auto f = static_cast<std::size_t>(node.feature);
        per_feature[f] += m.learning_rate * (child.value - node.value);
        touched[f] = 1;
    });
    for (std::size_t f = 0; f < per_feature.size(); ++f)
        if (touched[f]) a.contributions.push_back({m.feature_names[f], per_feature[f]});
    a.margin = m.margin(row);
    return a;
}

Attribution attribute_prediction(const Ensemble& m, const FeatureTable& t, std::size_t row) {
    auto aligned = t.reorder_columns(m.feature_names);
    return attribute_prediction(m, aligned.row(row));
}

double tis(std::span<const FeatureContribution> contribs, const std::vector<std::string>& temporal_features) {
    std::set<std::string, std::less<>> temporal(temporal_features.begin(), temporal_features.end());
    double temporal_mass = 0.0, total = 0.0;
    for (const auto& c : contribs) {
        double mass = std::abs(c.contribution);
        total += mass;
        if (temporal.contains(c.feature_name)) temporal_mass += mass;
    }
    if (!(total > 0)) return 0.0;
    return std::clamp(temporal_mass / total, 0.0, 1.0);
}

ExplanationSequence explanation_sequence(const Ensemble& m, std::span<const double> row, std::string tx_id,
                                         const std::vector<std::string>& temporal_features) {
    ExplanationSequence s;
    s.tx_id = std::move(tx_id);
    s.bias = walk_paths(m, row, [&](int tree, int depth, const TreeNode& node, const TreeNode& child) {
        s.steps.push_back({tree, depth, m.feature_names[static_cast<std::size_t>(node.feature)], node.threshold,
                           &child == &m.trees[static_cast<std::size_t>(tree)].nodes[static_cast<std::size_t>(node.left)]
                               ? Branch::left
                               : Branch::right,
                           m.learning_rate * (child.value - node.value)});
    });
    s.margin = m.margin(row);
    s.probability = sigmoid(s.margin);
    s.tis = tis(attribute_prediction(m, row).contributions, temporal_features);
    return s;
}

ExplanationSequence explanation_sequence(const Ensemble& m, const FeatureTable& t, std::size_t row,
                                         const std::vector<std::string>& temporal_features) {
    auto aligned = t.reorder_columns(m.feature_names);
    std::string id = aligned.row_ids().empty() ? std::to_string(row) : aligned.row_ids()[row];
    return explanation_sequence(m, aligned.row(row), std::move(id), temporal_features);
}

TISReport aggregate_tis(const Ensemble& m, const FeatureTable& t, const std::vector<std::string>& temporal_features,
                        double threshold) {
    auto aligned = t.reorder_columns(m.feature_names);
    TISReport r;
    r.temporal_feature_set = temporal_features;
    r.threshold = threshold;
    r.per_tx.reserve(aligned.n_rows());
    double flagged_sum = 0.0, tp_sum = 0.0;
    std::size_t tp_count = 0;
    for (std::size_t i = 0; i < aligned.n_rows(); ++i) {
        auto a = attribute_prediction(m, aligned.row(i));
        TransactionTis row;
        row.tx_id = aligned.row_ids().empty() ? std::to_string(i) : aligned.row_ids()[i];
        row.tis = tis(a.contributions, temporal_features);
        row.probability = sigmoid(a.margin);
        row.flagged = row.probability >= threshold;
        if (aligned.labels()) row.label = (*aligned.labels())[i];
        if (row.flagged) {
            ++r.flagged_count;
            flagged_sum += row.tis;
            if (row.label == 1) {
                ++tp_count;
                tp_sum += row.tis;
            }
        }
        r.per_tx.push_back(std::move(row));
    }
    if (r.flagged_count > 0) r.aggregate_tis = flagged_sum / static_cast<double>(r.flagged_count);
    if (tp_count > 0) r.aggregate_tis_true_positive = tp_sum / static_cast<double>(tp_count);
    return r;
}

void to_json(nlohmann::json& j, const ExplanationSequence& s) {
    auto steps = nlohmann::json::array();
    for (const auto& st : s.steps)
        steps.push_back({{"tree", st.tree},
                         {"depth", st.depth},
                         {"feature", st.feature},
                         {"threshold", st.threshold},
                         {"branch", st.branch == Branch::left ? "left" : "right"},
                         {"delta", st.delta}});
    j = nlohmann::json{{"tx_id", s.tx_id},   {"bias", s.bias},
                       {"steps", std::move(steps)}, {"margin", s.margin},
                       {"probability", s.probability}, {"tis", s.tis}};
}

void from_json(const nlohmann::json& j, ExplanationSequence& s) {
    j.at("tx_id").get_to(s.tx_id);
    j.at("bias").get_to(s.bias);
    j.at("margin").get_to(s.margin);
    j.at("probability").get_to(s.probability);
    j.at("tis").get_to(s.tis);
    s.steps.clear();
    for (const auto& js : j.at("steps")) {
        ExplanationStep st;
        js.at("tree").get_to(st.tree);
        js.at("depth").get_to(st.depth);
        js.at("feature").get_to(st.feature);
        js.at("threshold").get_to(st.threshold);
        st.branch = js.at("branch").get<std::string>() == "left" ? Branch::left : Branch::right;
        js.at("delta").get_to(st.delta);
        s.steps.push_back(std::move(st));
    }
}

void to_json(nlohmann::json& j, const TISReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    auto rows = nlohmann::json::array();
    for (const auto& t : r.per_tx) {
        nlohmann::json row{{"tx_id", t.tx_id}, {"tis", t.tis}, {"probability", t.probability}, {"flagged", t.flagged}};
        row["label"] = t.label ? nlohmann::json(*t.label) : nlohmann::json(nullptr);
        rows.push_back(std::move(row));
    }
    j = nlohmann::json{{"aggregate_tis", opt(r.aggregate_tis)},
                       {"aggregate_tis_true_positive", opt(r.aggregate_tis_true_positive)},
                       {"flagged_count", r.flagged_count},
                       {"threshold", r.threshold},
                       {"temporal_feature_set", r.temporal_feature_set},
                       {"per_tx", std::move(rows)}};
}

}  // namespace timetrail
