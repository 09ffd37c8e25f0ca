#include "timetrail/eval.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "timetrail/error.hpp"
#include "timetrail/text.hpp"

namespace timetrail {

namespace {

void check_lengths(std::size_t a, std::size_t b, std::string_view what) {
    if (a != b) throw ValidationError(fmt::format("{}: length mismatch {} vs {}", what, a, b));
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

// Indices ordered by descending score; ties keep index order.
std::vector<std::size_t> order_desc(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    return idx;
}

}  // namespace

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions) {
    check_lengths(labels.size(), predictions.size(), "confusion");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if ((labels[i] != 0 && labels[i] != 1) || (predictions[i] != 0 && predictions[i] != 1))
            throw ValidationError(fmt::format("confusion: non-binary value at index {}", i));
        if (labels[i] == 1)
            (predictions[i] == 1 ? cm.tp : cm.fn) += 1;
        else
            (predictions[i] == 1 ? cm.fp : cm.tn) += 1;
    }
    return cm;
}

ClassificationRates precision_recall_f1_accuracy(const ConfusionMatrix& cm) {
    ClassificationRates r;
    r.precision = ratio(cm.tp, cm.tp + cm.fp);
    r.recall = ratio(cm.tp, cm.tp + cm.fn);
    r.accuracy = ratio(cm.tp + cm.tn, cm.total());
    // Count form; equals the harmonic mean whenever both rates are defined
    // and stays defined (0) when nothing is flagged but positives exist.
    r.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
    return r;
}

std::optional<double> auc_roc(std::span<const int> labels, std::span<const double> scores) {
    check_lengths(labels.size(), scores.size(), "auc_roc");
    const auto n = labels.size();
    std::size_t positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) return std::nullopt;

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    // Sum of (1-based) midranks of the positives.
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[idx[k]] == 1) rank_sum += midrank;
        i = j;
    }
    double p = static_cast<double>(positives), q = static_cast<double>(negatives);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

std::vector<RocPoint> roc_curve(std::span<const int> labels, std::span<const double> scores) {
    check_lengths(labels.size(), scores.size(), "roc_curve");
    auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    auto negatives = static_cast<double>(labels.size()) - positives;
    std::vector<RocPoint> curve{{0.0, 0.0}};
    if (positives == 0 || negatives == 0) return curve;
    auto idx = order_desc(scores);
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        for (; j < idx.size() && scores[idx[j]] == scores[idx[i]]; ++j) (labels[idx[j]] == 1 ? tp : fp) += 1;
        curve.push_back({fp / negatives, tp / positives});
        i = j;
    }
    return curve;
}

double trapezoid_area(std::span<const RocPoint> curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
    return area;
}

std::optional<double> average_precision(std::span<const int> labels, std::span<const double> scores) {
    check_lengths(labels.size(), scores.size(), "average_precision");
    auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    if (positives == 0) return std::nullopt;
    auto idx = order_desc(scores);
    std::size_t tp = 0, seen = 0;
    double ap = 0.0, prev_recall = 0.0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        for (; j < idx.size() && scores[idx[j]] == scores[idx[i]]; ++j) tp += labels[idx[j]] == 1 ? 1 : 0;
        seen = j;
        double recall = static_cast<double>(tp) / static_cast<double>(positives);
        double precision = static_cast<double>(tp) / static_cast<double>(seen);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

std::string test_set_fingerprint(std::span<const std::string> tx_ids) {
    std::string joined;
    for (const auto& id : tx_ids) {
        joined += id;
        joined += '\n';
    }
    return sha256_hex(joined);
}

const MetricValue* EvaluationReport::find(std::string_view name) const {
    auto it = std::find_if(metrics.begin(), metrics.end(), [&](const auto& m) { return m.name == name; });
    return it == metrics.end() ? nullptr : &*it;
}

EvaluationReport evaluate(std::string model, std::span<const int> labels, std::span<const double> scores,
                          double threshold, std::string fingerprint, std::optional<double> tis_aggregate) {
    check_lengths(labels.size(), scores.size(), "evaluate");
    std::vector<int> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] >= threshold ? 1 : 0;

    EvaluationReport r;
    r.model = std::move(model);
    r.threshold = threshold;
    r.fingerprint = std::move(fingerprint);
    r.n_rows = labels.size();
    r.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    r.confusion = confusion(labels, preds);
    auto rates = precision_recall_f1_accuracy(r.confusion);
    r.metrics = {{"accuracy", rates.accuracy},
                 {"precision", rates.precision},
                 {"recall", rates.recall},
                 {"f1", rates.f1},
                 {"auc_roc", auc_roc(labels, scores)},
                 {"average_precision", average_precision(labels, scores)},
                 {"tis", tis_aggregate}};
    return r;
}

void to_json(nlohmann::json& j, const EvaluationReport& r) {
    auto metrics = nlohmann::json::object();
    for (const auto& m : r.metrics) metrics[m.name] = m.value ? nlohmann::json(*m.value) : nlohmann::json(nullptr);
    j = nlohmann::json{{"model", r.model},
                       {"metrics", std::move(metrics)},
                       {"threshold", r.threshold},
                       {"fingerprint", r.fingerprint},
                       {"n_rows", r.n_rows},
                       {"positives", r.positives},
                       {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn},
                                      {"fn", r.confusion.fn}}},
                       {"config", r.config}};
}

void from_json(const nlohmann::json& j, EvaluationReport& r) {
    j.at("model").get_to(r.model);
    r.metrics.clear();
    for (const auto& [name, v] : j.at("metrics").items())
        r.metrics.push_back({name, v.is_null() ? std::nullopt : std::optional<double>(v.get<double>())});
    j.at("threshold").get_to(r.threshold);
    j.at("fingerprint").get_to(r.fingerprint);
    j.at("n_rows").get_to(r.n_rows);
    j.at("positives").get_to(r.positives);
    const auto& cm = j.at("confusion");
    r.confusion = {cm.at("tp").get<std::size_t>(), cm.at("fp").get<std::size_t>(), cm.at("tn").get<std::size_t>(),
                   cm.at("fn").get<std::size_t>()};
    r.config = j.value("config", nlohmann::json::object());
}

std::optional<double> ComparisonRow::delta() const {
    if (!baseline || !timetrail) return std::nullopt;
    return *timetrail - *baseline;
}

ComparisonTable compare(const EvaluationReport& baseline, const EvaluationReport& timetrail) {
    if (baseline.fingerprint != timetrail.fingerprint)
        throw ValidationError(fmt::format("cannot compare reports from different test sets ({} vs {})",
                                          baseline.fingerprint, timetrail.fingerprint));
    ComparisonTable t;
    for (auto name : kComparisonMetrics) {
        const auto* b = baseline.find(name);
        const auto* m = timetrail.find(name);
        if (!b) throw ValidationError(fmt::format("baseline report is missing metric '{}'", name));
        if (!m) throw ValidationError(fmt::format("timetrail report is missing metric '{}'", name));
        t.rows.push_back({std::string(name), b->value, m->value});
    }
    return t;
}

std::string comparison_to_csv(const ComparisonTable& t) {
    auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string("undefined"); };
    std::string out = "metric,baseline,timetrail\n";
    for (const auto& r : t.rows) out += fmt::format("{},{},{}\n", r.metric, cell(r.baseline), cell(r.timetrail));
    return out;
}

std::string comparison_to_text(const ComparisonTable& t) {
    auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("undefined"); };
    std::string out = fmt::format("{:<20}{:>12}{:>12}{:>12}\n", "metric", "baseline", "timetrail", "delta");
    for (const auto& r : t.rows)
        out += fmt::format("{:<20}{:>12}{:>12}{:>12}\n", r.metric, cell(r.baseline), cell(r.timetrail), cell(r.delta()));
    return out;
}

}  // namespace timetrail
