#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace timetrail {

// Fraud (label 1) is the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions);

// Zero denominators yield nullopt, never 0. f1 is 2tp / (2tp + fp + fn).
struct ClassificationRates {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> accuracy;
};

ClassificationRates precision_recall_f1_accuracy(const ConfusionMatrix& cm);

// Mann-Whitney rank formulation, ties at half credit. nullopt unless both
// classes are present.
std::optional<double> auc_roc(std::span<const int> labels, std::span<const double> scores);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

// One point per distinct score (descending), preceded by (0, 0).
std::vector<RocPoint> roc_curve(std::span<const int> labels, std::span<const double> scores);
double trapezoid_area(std::span<const RocPoint> curve);

// sum_k (R_k - R_{k-1}) * P_k over the descending-score sweep, with all rows
// sharing a score entering together. nullopt without positives.
std::optional<double> average_precision(std::span<const int> labels, std::span<const double> scores);

// SHA-256 over the newline-joined transaction ids.
std::string test_set_fingerprint(std::span<const std::string> tx_ids);

inline constexpr std::array<std::string_view, 7> kComparisonMetrics = {
    "accuracy", "precision", "recall", "f1", "auc_roc", "average_precision", "tis"};

struct MetricValue {
    std::string name;
    std::optional<double> value;  // nullopt: undefined
};

struct EvaluationReport {
    std::string model;
    std::vector<MetricValue> metrics;
    double threshold = 0.5;
    std::string fingerprint;
    std::size_t n_rows = 0;
    std::size_t positives = 0;
    ConfusionMatrix confusion;
    nlohmann::json config = nlohmann::json::object();

    // nullptr when the report carries no entry with that name.
    const MetricValue* find(std::string_view name) const;
};

EvaluationReport evaluate(std::string model, std::span<const int> labels, std::span<const double> scores,
                          double threshold, std::string fingerprint, std::optional<double> tis_aggregate);

void to_json(nlohmann::json& j, const EvaluationReport& r);
void from_json(const nlohmann::json& j, EvaluationReport& r);

struct ComparisonRow {
    std::string metric;
    std::optional<double> baseline;
    std::optional<double> timetrail;

    std::optional<double> delta() const;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
};

// Throws ValidationError on differing fingerprints or when either report
// lacks one of kComparisonMetrics (naming it).
ComparisonTable compare(const EvaluationReport& baseline, const EvaluationReport& timetrail);

std::string comparison_to_csv(const ComparisonTable& t);  // metric,baseline,timetrail
std::string comparison_to_text(const ComparisonTable& t);

}  // namespace timetrail
