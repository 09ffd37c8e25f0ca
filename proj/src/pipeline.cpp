#include "timetrail/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "json_fields.hpp"
#include "timetrail/correlate.hpp"
#include "timetrail/emit.hpp"
#include "timetrail/error.hpp"
#include "timetrail/eval.hpp"
#include "timetrail/explain.hpp"
#include "timetrail/features.hpp"
#include "timetrail/text.hpp"

namespace timetrail {

namespace {

constexpr std::array<std::string_view, 8> kStageNames = {"generate", "preprocess", "enrich", "correlate",
                                                         "train",    "evaluate",   "explain", "plot"};

constexpr std::uint64_t kGeneratorStream = 1;
constexpr std::uint64_t kUndersampleStream = 2;

using detail::bad_field;
using detail::join_path;
using detail::optional_field;
using detail::read_bool;
using detail::read_double;
using detail::read_i64;
using detail::read_string;
using detail::read_u64;
using detail::reject_unknown;

std::vector<std::string> read_string_list(const nlohmann::json& v, std::string_view path) {
    if (!v.is_array()) bad_field(path, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read_string(v[i], fmt::format("{}[{}]", path, i)));
    return out;
}

std::vector<std::pair<std::string, std::string>> read_pairs(const nlohmann::json& v, std::string_view path) {
    if (!v.is_array()) bad_field(path, "expected an array of [name, name] pairs");
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto p = fmt::format("{}[{}]", path, i);
        auto names = read_string_list(v[i], p);
        if (names.size() != 2) bad_field(p, "expected exactly two attribute names");
        out.emplace_back(names[0], names[1]);
    }
    return out;
}

nlohmann::json read_json_file(const std::filesystem::path& p) {
    auto text = read_file(p);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(fmt::format("{}: {}", p.string(), e.what()));
    }
}

template <typename T>
T load_json_as(const std::filesystem::path& p) {
    auto j = read_json_file(p);
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(fmt::format("{}: {}", p.string(), e.what()));
    }
}

class Outputs {
public:
    Outputs(const RunConfig& c, Stage s) : dir_(c.output_dir), stage_(s) {}

    void text(const std::string& name, std::string_view body) {
        write_file(dir_ / name, body);
        list_.push_back({name, stage_});
    }
    void json(const std::string& name, const nlohmann::json& j) { text(name, j.dump(2) + "\n"); }
    std::vector<Artifact> take() { return std::move(list_); }

private:
    std::filesystem::path dir_;
    Stage stage_;
    std::vector<Artifact> list_;
};

std::string file_safe(std::string_view s) {
    std::string out(s);
    for (char& ch : out)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_')) ch = '_';
    return out;
}

std::vector<EnrichedTransaction> load_enriched(const RunConfig& c) {
    return parse_enriched(read_file(c.output_dir / "enriched.csv"));
}

// Enriched rows whose tx_id appears in the given split file, in time order.
std::vector<EnrichedTransaction> select_split(const std::vector<EnrichedTransaction>& rows, const RunConfig& c,
                                              std::string_view split_file) {
    auto split = read_transactions_file((c.output_dir / split_file).string());
    std::unordered_set<std::string> ids;
    for (const auto& tx : split.rows()) ids.insert(tx.tx_id);
    std::vector<EnrichedTransaction> out;
    out.reserve(ids.size());
    for (const auto& r : rows)
        if (ids.contains(r.base.tx_id)) out.push_back(r);
    if (out.size() != ids.size())
        throw ValidationError(fmt::format("{} lists {} rows but only {} appear in enriched.csv", split_file,
                                          ids.size(), out.size()));
    return out;
}

struct ScaledTables {
    FeatureTable raw;
    FeatureTable enriched;
};

ScaledTables scaled_tables(const RunConfig& c, std::span<const EnrichedTransaction> rows) {
    auto raw_sc = load_json_as<ScalerParams>(c.output_dir / "scaler_baseline.json");
    auto enr_sc = load_json_as<ScalerParams>(c.output_dir / "scaler_timetrail.json");
    return {apply_scaler(raw_sc, raw_feature_table(rows)), apply_scaler(enr_sc, enriched_feature_table(rows))};
}

nlohmann::json config_echo(const RunConfig& c) {
    nlohmann::json j = c;
    j.erase("paths");
    return j;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

void stage_generate(const RunConfig& c, Outputs& out) {
    auto g = c.generator;
    g.seed = generator_seed(c);
    auto d = generate(g);
    out.text("dataset.csv", serialize_transactions(d));
    out.json("dataset_summary.json", describe(d));
}

void stage_preprocess(const RunConfig& c, Outputs& out) {
    auto src = c.input.empty() ? c.output_dir / "dataset.csv" : std::filesystem::path(c.input);
    auto d = read_transactions_file(src.string());
    auto cleaned = cleanse(d, c.cleanse);
    out.text("clean.csv", serialize_transactions(cleaned.data));
    out.json("cleanse_report.json", cleaned.report);
    auto split = temporal_split(cleaned.data, c.train_frac, c.val_frac);
    out.text("split_train.csv", serialize_transactions(split.train));
    out.text("split_val.csv", serialize_transactions(split.val));
    out.text("split_test.csv", serialize_transactions(split.test));
}

void stage_enrich(const RunConfig& c, Outputs& out) {
    auto d = read_transactions_file((c.output_dir / "clean.csv").string());
    out.text("enriched.csv", serialize_enriched(enrich(d, c.enrich)));
}

void stage_correlate(const RunConfig& c, Outputs& out) {
    auto rows = load_enriched(c);
    auto attrs = c.correlation_attributes();
    const auto& cs = c.correlate;

    std::vector<CorrelationMatrix> all{correlation_matrix(rows, attrs)};
    auto windows = windowed_matrices(rows, attrs, cs.window_seconds);
    all.insert(all.end(), windows.begin(), windows.end());
    out.text("correlation_long.csv", matrices_to_long_csv(all));

    // Windows holding the most fraud rows; earlier windows win ties.
    std::vector<Timestamp> times(rows.size());
    std::vector<std::size_t> fraud_prefix(rows.size() + 1, 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        times[i] = rows[i].base.timestamp;
        fraud_prefix[i + 1] = fraud_prefix[i] + (rows[i].base.is_fraud() ? 1 : 0);
    }
    auto fraud_in = [&](const WindowInfo& w) {
        auto lo = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), w.start) - times.begin());
        auto hi = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), w.end) - times.begin());
        return fraud_prefix[hi] - fraud_prefix[lo];
    };
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> fraud(windows.size());
    for (std::size_t k = 0; k < windows.size(); ++k) fraud[k] = fraud_in(*windows[k].window);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fraud[a] > fraud[b]; });
    order.resize(std::min(order.size(), cs.top_windows));
    std::sort(order.begin(), order.end());

    auto selected = nlohmann::json::array();
    selected.push_back(all.front());
    for (auto k : order) selected.push_back(windows[k]);
    out.json("correlation_matrices.json", selected);

    auto summary = nlohmann::json::array();
    for (const auto& pair : cs.pairs) {
        auto series = dynamic_correlation(rows, pair, cs.window_seconds, cs.stride_seconds);
        out.text(fmt::format("dynamic_{}__{}.csv", pair.first, pair.second), series_to_csv(series));
        auto row_level = pearson(attribute_series(rows, pair.first), attribute_series(rows, pair.second));
        auto aggregate = window_aggregate_correlation(rows, pair, cs.window_seconds);
        auto opt = [](const Coefficient& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
        summary.push_back({{"pair", {pair.first, pair.second}},
                           {"row_level", opt(row_level)},
                           {"window_aggregate", opt(aggregate)},
                           {"windows", series.points.size()}});
    }
    out.json("correlation_summary.json", summary);
}

void stage_train(const RunConfig& c, Outputs& out) {
    auto rows = load_enriched(c);
    auto train = select_split(rows, c, "split_train.csv");
    auto raw = raw_feature_table(train);
    auto enr = enriched_feature_table(train);
    if (!raw.labels()) throw ValidationError("the train split must be fully labeled");

    auto raw_sc = fit_scaler(raw);
    auto enr_sc = fit_scaler(enr);
    // Same labels and seed on both sides keep the retained rows identical.
    auto raw_u = undersample(apply_scaler(raw_sc, raw), c.undersample_ratio, undersample_seed(c));
    auto enr_u = undersample(apply_scaler(enr_sc, enr), c.undersample_ratio, undersample_seed(c));

    auto baseline = train_logistic(raw_u, c.logistic);
    auto timetrail = train_gbt(enr_u, c.gbt);

    out.json("scaler_baseline.json", raw_sc);
    out.json("scaler_timetrail.json", enr_sc);
    out.json("model_baseline.json", baseline);
    out.json("model_timetrail.json", timetrail);

    auto count = [](const FeatureTable& t) { return std::count(t.labels()->begin(), t.labels()->end(), 1); };
    out.json("train_report.json",
             {{"train_rows", raw.n_rows()},
              {"train_fraud", count(raw)},
              {"undersampled_rows", raw_u.n_rows()},
              {"undersampled_fraud", count(raw_u)},
              {"baseline_features", baseline.feature_names},
              {"timetrail_features", timetrail.feature_names},
              {"baseline_train_log_loss", log_loss(*raw_u.labels(), predict_proba(baseline, raw_u))},
              {"timetrail_train_log_loss", log_loss(*enr_u.labels(), predict_proba(timetrail, enr_u))}});
}

void stage_evaluate(const RunConfig& c, Outputs& out) {
    auto rows = load_enriched(c);
    auto test = select_split(rows, c, "split_test.csv");
    auto baseline = load_json_as<LogisticModel>(c.output_dir / "model_baseline.json");
    auto timetrail = load_json_as<Ensemble>(c.output_dir / "model_timetrail.json");
    auto tables = scaled_tables(c, test);
    if (!tables.raw.labels()) throw ValidationError("the test split must be fully labeled");
    const auto& labels = *tables.raw.labels();

    auto p_base = predict_proba(baseline, tables.raw);
    auto p_tt = predict_proba(timetrail, tables.enriched);
    auto fingerprint = test_set_fingerprint(tables.raw.row_ids());
    auto tis = aggregate_tis(timetrail, tables.enriched, c.temporal_features, c.threshold);

    auto rep_b = evaluate("baseline", labels, p_base, c.threshold, fingerprint, std::nullopt);
    auto rep_t = evaluate("timetrail", labels, p_tt, c.threshold, fingerprint, tis.aggregate_tis);
    rep_b.config = rep_t.config = config_echo(c);
    out.json("report_baseline.json", rep_b);
    out.json("report_timetrail.json", rep_t);

    auto table = compare(rep_b, rep_t);
    out.text("comparison.csv", comparison_to_csv(table));
    out.text("comparison.txt", comparison_to_text(table));

    std::string preds = "tx_id,label,p_baseline,p_timetrail\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        preds += fmt::format("{},{},{},{}\n", tables.raw.row_ids()[i], labels[i], p_base[i], p_tt[i]);
    out.text("predictions_test.csv", preds);
}

void stage_explain(const RunConfig& c, Outputs& out) {
    auto rows = load_enriched(c);
    auto test = select_split(rows, c, "split_test.csv");
    auto timetrail = load_json_as<Ensemble>(c.output_dir / "model_timetrail.json");
    auto table = scaled_tables(c, test).enriched;
    auto report = aggregate_tis(timetrail, table, c.temporal_features, c.threshold);
    out.json("tis_report.json", report);

    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < report.per_tx.size(); ++i)
        if (report.per_tx[i].flagged) flagged.push_back(i);
    std::stable_sort(flagged.begin(), flagged.end(), [&](auto a, auto b) {
        return report.per_tx[a].probability > report.per_tx[b].probability;
    });
    flagged.resize(std::min(flagged.size(), c.explain_top_k));

    auto seqs = nlohmann::json::array();
    for (auto i : flagged) seqs.push_back(explanation_sequence(timetrail, table, i, c.temporal_features));
    out.json("explanations.json", seqs);
}

void stage_plot(const RunConfig& c, Outputs& out) {
    auto matrices = load_json_as<std::vector<CorrelationMatrix>>(c.output_dir / "correlation_matrices.json");
    for (const auto& m : matrices) {
        auto h = heatmap_data(m);
        auto base = m.window ? fmt::format("heatmap_{}", m.window->start) : std::string("heatmap_all");
        out.text(base + ".csv", heatmap_csv(h));
        out.json(base + ".json", h);
        out.text(base + ".svg", heatmap_svg(h));
    }

    auto test = read_transactions_file((c.output_dir / "split_test.csv").string());
    auto pred_lines = split_lines(read_file(c.output_dir / "predictions_test.csv"));
    if (pred_lines.size() != test.size() + 1)
        throw ValidationError("predictions_test.csv does not match split_test.csv");
    std::vector<int> flags(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        auto f = split_fields(pred_lines[i + 1]);
        if (f.size() != 4 || f[0] != test[i].tx_id)
            throw ValidationError(fmt::format("predictions_test.csv line {} does not match split_test.csv", i + 2));
        double p = 0.0;
        auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), p);
        if (ec != std::errc{}) throw ValidationError(fmt::format("predictions_test.csv line {}: bad probability", i + 2));
        flags[i] = p >= c.threshold ? 1 : 0;
    }
    auto series = flagged_frequency_series(test, flags, c.series_window_seconds);
    out.text("flag_series.csv", series_csv(series));
    out.text("flag_series.svg", series_svg(series));

    for (const auto& j : read_json_file(c.output_dir / "explanations.json")) {
        auto s = j.get<ExplanationSequence>();
        auto base = "sequence_" + file_safe(s.tx_id);
        out.text(base + ".json", sequence_json(s));
        out.text(base + ".svg", sequence_svg(s));
    }

    auto tis = read_json_file(c.output_dir / "tis_report.json");
    std::vector<double> scores;
    for (const auto& row : tis.at("per_tx")) scores.push_back(row.at("tis").get<double>());
    auto h = histogram(scores, c.tis_bins);
    out.text("tis_hist.csv", histogram_csv(h));
    out.text("tis_hist.svg", histogram_svg(h, "Temporal Interpretability Score, test rows"));
}

}  // namespace

std::vector<std::string> RunConfig::correlation_attributes() const {
    if (!correlate.attributes.empty()) return correlate.attributes;
    auto names = temporal_feature_names();
    names.push_back("amount");
    return names;
}

std::string_view to_string(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

Stage parse_stage(std::string_view s) {
    for (std::size_t i = 0; i < kStageNames.size(); ++i)
        if (kStageNames[i] == s) return kAllStages[i];
    throw ValidationError(fmt::format("unknown stage '{}'", s));
}

std::uint64_t generator_seed(const RunConfig& c) { return stream_seed(c.seed, kGeneratorStream); }
std::uint64_t undersample_seed(const RunConfig& c) { return stream_seed(c.seed, kUndersampleStream); }

void to_json(nlohmann::json& j, const RunConfig& c) {
    nlohmann::json gen = c.generator;
    gen.erase("seed");
    auto pairs = nlohmann::json::array();
    for (const auto& [a, b] : c.correlate.pairs) pairs.push_back({a, b});
    const auto& e = c.enrich;
    j = nlohmann::json{
        {"seed", c.seed},
        {"paths", {{"input", c.input}, {"output_dir", c.output_dir.string()}}},
        {"generator", std::move(gen)},
        {"cleanse", {{"dedup_key", c.cleanse.dedup_key == DedupKey::tx_id ? "tx_id" : "composite"},
                     {"remove_outliers", c.cleanse.remove_outliers},
                     {"iqr_k", c.cleanse.iqr_k}}},
        {"split", {{"train", c.train_frac}, {"val", c.val_frac}}},
        {"enrich", {{"recency_cap_seconds", e.recency_cap_seconds},
                    {"user_window_short", e.user_window_short},
                    {"user_window_burst", e.user_window_burst},
                    {"user_window_week", e.user_window_week},
                    {"terminal_window", e.terminal_window},
                    {"amount_mean_window", e.amount_mean_window},
                    {"amount_ratio_smoothing", e.amount_ratio_smoothing}}},
        {"correlate", {{"window_seconds", c.correlate.window_seconds},
                       {"stride_seconds", c.correlate.stride_seconds},
                       {"attributes", c.correlation_attributes()},
                       {"pairs", std::move(pairs)},
                       {"top_windows", c.correlate.top_windows}}},
        {"gbt", {{"n_trees", c.gbt.n_trees},
                 {"max_depth", c.gbt.max_depth},
                 {"learning_rate", c.gbt.learning_rate},
                 {"lambda", c.gbt.lambda},
                 {"min_child_weight", c.gbt.min_child_weight},
                 {"min_split_gain", c.gbt.min_split_gain},
                 {"leaf_clamp", c.gbt.leaf_clamp}}},
        {"logistic", {{"l2", c.logistic.l2}, {"max_epochs", c.logistic.max_epochs}, {"tolerance", c.logistic.tolerance}}},
        {"undersample_ratio", c.undersample_ratio},
        {"threshold", c.threshold},
        {"temporal_features", c.temporal_features},
        {"explain_top_k", c.explain_top_k},
        {"tis_bins", c.tis_bins},
        {"series_window_seconds", c.series_window_seconds}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
    reject_unknown(j, "", {"seed", "paths", "generator", "cleanse", "split", "enrich", "correlate", "gbt", "logistic",
                           "undersample_ratio", "threshold", "temporal_features", "explain_top_k", "tis_bins",
                           "series_window_seconds"});
    optional_field(j, "", "seed", c.seed, read_u64);
    optional_field(j, "", "undersample_ratio", c.undersample_ratio, read_double);
    optional_field(j, "", "threshold", c.threshold, read_double);
    optional_field(j, "", "explain_top_k", c.explain_top_k, read_u64);
    optional_field(j, "", "tis_bins", c.tis_bins, read_u64);
    optional_field(j, "", "series_window_seconds", c.series_window_seconds, read_i64);
    optional_field(j, "", "temporal_features", c.temporal_features, read_string_list);

    if (auto it = j.find("paths"); it != j.end()) {
        reject_unknown(*it, "paths", {"input", "output_dir"});
        optional_field(*it, "paths", "input", c.input, read_string);
        std::string dir = c.output_dir.string();
        optional_field(*it, "paths", "output_dir", dir, read_string);
        c.output_dir = dir;
    }
    if (auto it = j.find("generator"); it != j.end()) {
        detail::require_object(*it, "generator");
        if (it->contains("seed")) bad_field("generator.seed", "the generator seed is derived from the top-level seed");
        try {
            it->get_to(c.generator);
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("generator: {}", e.what()));
        }
    }
    if (auto it = j.find("cleanse"); it != j.end()) {
        reject_unknown(*it, "cleanse", {"dedup_key", "remove_outliers", "iqr_k"});
        if (auto k = it->find("dedup_key"); k != it->end()) {
            auto v = read_string(*k, "cleanse.dedup_key");
            if (v == "tx_id") c.cleanse.dedup_key = DedupKey::tx_id;
            else if (v == "composite") c.cleanse.dedup_key = DedupKey::composite;
            else bad_field("cleanse.dedup_key", "expected 'tx_id' or 'composite'");
        }
        optional_field(*it, "cleanse", "remove_outliers", c.cleanse.remove_outliers, read_bool);
        optional_field(*it, "cleanse", "iqr_k", c.cleanse.iqr_k, read_double);
    }
    if (auto it = j.find("split"); it != j.end()) {
        reject_unknown(*it, "split", {"train", "val"});
        optional_field(*it, "split", "train", c.train_frac, read_double);
        optional_field(*it, "split", "val", c.val_frac, read_double);
    }
    if (auto it = j.find("enrich"); it != j.end()) {
        auto& e = c.enrich;
        reject_unknown(*it, "enrich", {"recency_cap_seconds", "user_window_short", "user_window_burst",
                                       "user_window_week", "terminal_window", "amount_mean_window",
                                       "amount_ratio_smoothing"});
        optional_field(*it, "enrich", "recency_cap_seconds", e.recency_cap_seconds, read_i64);
        optional_field(*it, "enrich", "user_window_short", e.user_window_short, read_i64);
        optional_field(*it, "enrich", "user_window_burst", e.user_window_burst, read_i64);
        optional_field(*it, "enrich", "user_window_week", e.user_window_week, read_i64);
        optional_field(*it, "enrich", "terminal_window", e.terminal_window, read_i64);
        optional_field(*it, "enrich", "amount_mean_window", e.amount_mean_window, read_i64);
        optional_field(*it, "enrich", "amount_ratio_smoothing", e.amount_ratio_smoothing, read_double);
    }
    if (auto it = j.find("correlate"); it != j.end()) {
        auto& cs = c.correlate;
        reject_unknown(*it, "correlate", {"window_seconds", "stride_seconds", "attributes", "pairs", "top_windows"});
        optional_field(*it, "correlate", "window_seconds", cs.window_seconds, read_i64);
        optional_field(*it, "correlate", "stride_seconds", cs.stride_seconds, read_i64);
        optional_field(*it, "correlate", "attributes", cs.attributes, read_string_list);
        optional_field(*it, "correlate", "pairs", cs.pairs, read_pairs);
        optional_field(*it, "correlate", "top_windows", cs.top_windows, read_u64);
    }
    if (auto it = j.find("gbt"); it != j.end()) {
        auto& g = c.gbt;
        reject_unknown(*it, "gbt", {"n_trees", "max_depth", "learning_rate", "lambda", "min_child_weight",
                                    "min_split_gain", "leaf_clamp"});
        optional_field(*it, "gbt", "n_trees", g.n_trees, read_i64);
        optional_field(*it, "gbt", "max_depth", g.max_depth, read_i64);
        optional_field(*it, "gbt", "learning_rate", g.learning_rate, read_double);
        optional_field(*it, "gbt", "lambda", g.lambda, read_double);
        optional_field(*it, "gbt", "min_child_weight", g.min_child_weight, read_double);
        optional_field(*it, "gbt", "min_split_gain", g.min_split_gain, read_double);
        optional_field(*it, "gbt", "leaf_clamp", g.leaf_clamp, read_double);
    }
    if (auto it = j.find("logistic"); it != j.end()) {
        auto& l = c.logistic;
        reject_unknown(*it, "logistic", {"l2", "max_epochs", "tolerance"});
        optional_field(*it, "logistic", "l2", l.l2, read_double);
        optional_field(*it, "logistic", "max_epochs", l.max_epochs, read_i64);
        optional_field(*it, "logistic", "tolerance", l.tolerance, read_double);
    }
}

void validate(const RunConfig& c) {
    auto require = [](bool ok, std::string_view field, std::string_view why) {
        if (!ok) bad_field(field, why);
    };
    require(c.train_frac > 0 && c.train_frac < 1, "split.train", "must lie in (0, 1)");
    require(c.val_frac > 0 && c.val_frac < 1, "split.val", "must lie in (0, 1)");
    require(c.train_frac + c.val_frac < 1, "split", "train + val must leave a non-empty test share");
    require(c.undersample_ratio >= 1, "undersample_ratio", "must be at least 1");
    require(c.threshold > 0 && c.threshold < 1, "threshold", "must lie in (0, 1)");
    require(c.cleanse.iqr_k > 0, "cleanse.iqr_k", "must be positive");

    const auto& e = c.enrich;
    require(e.recency_cap_seconds > 0, "enrich.recency_cap_seconds", "must be positive");
    require(e.user_window_short > 0, "enrich.user_window_short", "must be positive");
    require(e.user_window_burst > 0, "enrich.user_window_burst", "must be positive");
    require(e.user_window_week > 0, "enrich.user_window_week", "must be positive");
    require(e.terminal_window > 0, "enrich.terminal_window", "must be positive");
    require(e.amount_mean_window > 0, "enrich.amount_mean_window", "must be positive");
    require(e.amount_ratio_smoothing > 0, "enrich.amount_ratio_smoothing", "must be positive");

    const auto& cs = c.correlate;
    require(cs.stride_seconds > 0, "correlate.stride_seconds", "must be positive");
    require(cs.window_seconds >= cs.stride_seconds, "correlate.window_seconds", "must be at least the stride");
    auto known_attr = [](const std::string& name) {
        auto t = temporal_feature_names();
        return name == "amount" || std::find(t.begin(), t.end(), name) != t.end();
    };
    for (std::size_t i = 0; i < cs.attributes.size(); ++i)
        require(known_attr(cs.attributes[i]), fmt::format("correlate.attributes[{}]", i), "unknown attribute");
    for (std::size_t i = 0; i < cs.pairs.size(); ++i)
        require(known_attr(cs.pairs[i].first) && known_attr(cs.pairs[i].second), fmt::format("correlate.pairs[{}]", i),
                "unknown attribute");

    const auto& g = c.gbt;
    require(g.n_trees >= 1, "gbt.n_trees", "must be at least 1");
    require(g.max_depth >= 1, "gbt.max_depth", "must be at least 1");
    require(g.learning_rate > 0 && g.learning_rate <= 1, "gbt.learning_rate", "must lie in (0, 1]");
    require(g.lambda >= 0, "gbt.lambda", "must be non-negative");
    require(g.min_child_weight >= 0, "gbt.min_child_weight", "must be non-negative");
    require(g.min_split_gain >= 0, "gbt.min_split_gain", "must be non-negative");
    require(g.leaf_clamp > 0, "gbt.leaf_clamp", "must be positive");

    require(c.logistic.l2 >= 0, "logistic.l2", "must be non-negative");
    require(c.logistic.max_epochs >= 1, "logistic.max_epochs", "must be at least 1");
    require(c.logistic.tolerance > 0, "logistic.tolerance", "must be positive");

    require(!c.temporal_features.empty(), "temporal_features", "must not be empty");
    auto features = enriched_feature_names();
    for (std::size_t i = 0; i < c.temporal_features.size(); ++i)
        require(std::find(features.begin(), features.end(), c.temporal_features[i]) != features.end(),
                fmt::format("temporal_features[{}]", i), "not a model feature");
    require(c.tis_bins >= 1, "tis_bins", "must be at least 1");
    require(c.series_window_seconds > 0, "series_window_seconds", "must be positive");
    require(!c.output_dir.empty(), "paths.output_dir", "must not be empty");

    if (c.input.empty()) {
        try {
            validate(c.generator);
        } catch (const ValidationError& ex) {
            throw ValidationError(fmt::format("generator: {}", ex.what()));
        }
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    auto j = read_json_file(path);
    RunConfig c;
    from_json(j, c);
    validate(c);
    return c;
}

std::vector<Artifact> run_stage(Stage s, const RunConfig& c) {
    Outputs out(c, s);
    try {
        switch (s) {
            case Stage::generate: stage_generate(c, out); break;
            case Stage::preprocess: stage_preprocess(c, out); break;
            case Stage::enrich: stage_enrich(c, out); break;
            case Stage::correlate: stage_correlate(c, out); break;
            case Stage::train: stage_train(c, out); break;
            case Stage::evaluate: stage_evaluate(c, out); break;
            case Stage::explain: stage_explain(c, out); break;
            case Stage::plot: stage_plot(c, out); break;
        }
    } catch (const IoError& e) {
        throw IoError(fmt::format("stage {}: {}", to_string(s), e.what()));
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("stage {}: {}", to_string(s), e.what()));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(fmt::format("stage {}: {}", to_string(s), e.what()));
    }
    return out.take();
}

std::vector<ManifestEntry> build_manifest(const std::filesystem::path& out_dir, std::span<const Artifact> artifacts) {
    std::vector<ManifestEntry> m;
    m.reserve(artifacts.size());
    for (const auto& a : artifacts)
        m.push_back({a.path, sha256_hex(read_file(out_dir / a.path)), std::string(to_string(a.stage))});
    return m;
}

std::string manifest_json(std::span<const ManifestEntry> m) {
    auto j = nlohmann::json::array();
    for (const auto& e : m) j.push_back({{"path", e.path}, {"sha256", e.sha256}, {"stage", e.stage}});
    return j.dump(2) + "\n";
}

std::vector<ManifestEntry> run_all(const RunConfig& c) {
    std::vector<Artifact> artifacts;
    for (auto s : kAllStages) {
        if (s == Stage::generate && !c.input.empty()) continue;
        auto produced = run_stage(s, c);
        artifacts.insert(artifacts.end(), produced.begin(), produced.end());
    }
    auto manifest = build_manifest(c.output_dir, artifacts);
    write_file(c.output_dir / "manifest.json", manifest_json(manifest));
    return manifest;
}

}  // namespace timetrail
