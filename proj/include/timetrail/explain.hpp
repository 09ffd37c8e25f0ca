#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "timetrail/features.hpp"
#include "timetrail/model.hpp"

namespace timetrail {

// Signed log-odds credited to one feature.
struct FeatureContribution {
    std::string feature_name;
    double contribution = 0.0;
};

// Decision-path attribution. At every internal node on a row's path the
// change from the node's training mean to the taken child's training mean
// (times the learning rate) is credited to the split feature; the root means
// plus base_score form the bias. Hence bias + sum(contributions) == margin.
struct Attribution {
    double bias = 0.0;
    std::vector<FeatureContribution> contributions;  // model feature order
    double margin = 0.0;
};

// `row` is in model feature order.
Attribution attribute_prediction(const Ensemble& m, std::span<const double> row);
// Columns matched by name; throws ValidationError on a schema mismatch.
Attribution attribute_prediction(const Ensemble& m, const FeatureTable& t, std::size_t row);

enum class Branch { left, right };

struct ExplanationStep {
    int tree = 0;
    int depth = 0;
    std::string feature;
    double threshold = 0.0;
    Branch branch = Branch::left;
    double delta = 0.0;  // log-odds change contributed by this step
};

struct ExplanationSequence {
    std::string tx_id;
    double bias = 0.0;
    std::vector<ExplanationStep> steps;  // (tree, depth) order
    double margin = 0.0;
    double probability = 0.0;
    double tis = 0.0;
};

ExplanationSequence explanation_sequence(const Ensemble& m, std::span<const double> row, std::string tx_id,
                                         const std::vector<std::string>& temporal_features);
ExplanationSequence explanation_sequence(const Ensemble& m, const FeatureTable& t, std::size_t row,
                                         const std::vector<std::string>& temporal_features);

// Share of absolute attribution mass carried by temporal features; 0 when the
// total mass is 0.
double tis(std::span<const FeatureContribution> contribs, const std::vector<std::string>& temporal_features);

struct TransactionTis {
    std::string tx_id;
    double tis = 0.0;
    double probability = 0.0;
    bool flagged = false;
    std::optional<int> label;
};

struct TISReport {
    std::vector<TransactionTis> per_tx;
    std::optional<double> aggregate_tis;                // mean over flagged rows
    std::optional<double> aggregate_tis_true_positive;  // flagged rows labeled fraud
    std::size_t flagged_count = 0;
    std::vector<std::string> temporal_feature_set;
    double threshold = 0.5;
};

TISReport aggregate_tis(const Ensemble& m, const FeatureTable& t, const std::vector<std::string>& temporal_features,
                        double threshold);

void to_json(nlohmann::json& j, const ExplanationSequence& s);
void from_json(const nlohmann::json& j, ExplanationSequence& s);
void to_json(nlohmann::json& j, const TISReport& r);

}  // namespace timetrail
