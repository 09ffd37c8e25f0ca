#include "timetrail/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "timetrail/error.hpp"

namespace timetrail {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

namespace {

const std::vector<int>& require_labels(const FeatureTable& t, std::string_view what) {
    if (!t.labels()) throw ValidationError(fmt::format("{} requires a labeled table", what));
    return *t.labels();
}

void require_finite(const FeatureTable& t) {
    for (std::size_t i = 0; i < t.n_rows(); ++i)
        for (std::size_t j = 0; j < t.n_features(); ++j)
            if (!std::isfinite(t.at(i, j)))
                throw ValidationError(
                    fmt::format("non-finite value in feature '{}' at row {}", t.feature_names()[j], i));
}

std::size_t count_positive(const std::vector<int>& labels) {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

}  // namespace

FeatureTable undersample(const FeatureTable& t, double majority_ratio, std::uint64_t seed) {
    const auto& labels = require_labels(t, "undersample");
    if (!(majority_ratio >= 1.0))
        throw ValidationError(fmt::format("undersample ratio must be >= 1 (got {})", majority_ratio));
    auto positives = count_positive(labels);
    auto negatives = labels.size() - positives;
    int minority_label = positives <= negatives ? 1 : 0;
    auto minority = std::min(positives, negatives);
    if (minority == 0) throw ValidationError("undersample: minority class has no rows");

    std::vector<std::size_t> majority_rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != minority_label) majority_rows.push_back(i);
    auto want = static_cast<std::size_t>(std::ceil(majority_ratio * static_cast<double>(minority) - 1e-9));
    want = std::min(want, majority_rows.size());

    // Partial Fisher-Yates: the first `want` slots become the sample.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < want; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, majority_rows.size() - 1);
        std::swap(majority_rows[i], majority_rows[pick(rng)]);
    }
    std::vector<char> keep(labels.size(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == minority_label) keep[i] = 1;
    for (std::size_t i = 0; i < want; ++i) keep[majority_rows[i]] = 1;

    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) selected.push_back(i);
    return t.select_rows(selected);
}

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

std::size_t Tree::leaf_for(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return i;
}

int Tree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].is_leaf()) continue;
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        best = std::max(best, d[i] + 1);
    }
    return best;
}

double Ensemble::margin(std::span<const double> row) const {
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.predict(row);
    return base_score + learning_rate * sum;
}

namespace {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct ScanState {
    double g_left = 0.0;
    double h_left = 0.0;
    double last_value = 0.0;
    bool started = false;
};

// Gains this close are the same split quality up to rounding; the earlier
// (feature, threshold) candidate is kept.
constexpr double kGainTieTolerance = 1e-12;

bool strictly_better(double gain, double best) {
    return gain > best + kGainTieTolerance * std::max(1.0, std::abs(best));
}

double midpoint(double a, double b) {
    double m = a + (b - a) / 2.0;
    return m > a ? m : b;
}

// Level-wise exact greedy construction. `row_node` receives each row's leaf.
Tree build_tree(const FeatureTable& t, const std::vector<std::vector<std::uint32_t>>& sorted_rows,
                std::span<const double> grad, std::span<const double> hess, const GBTConfig& cfg,
                std::vector<int>& row_node) {
    const auto n = t.n_rows();
    const auto n_features = t.n_features();
    Tree tree;
    std::vector<double> node_g(1, 0.0), node_h(1, 0.0);
    tree.nodes.emplace_back();
    for (std::size_t i = 0; i < n; ++i) {
        node_g[0] += grad[i];
        node_h[0] += hess[i];
    }
    tree.nodes[0].samples = n;
    std::fill(row_node.begin(), row_node.end(), 0);

    std::vector<int> frontier{0};
    for (int depth = 0; depth < cfg.max_depth && !frontier.empty(); ++depth) {
        std::vector<int> slot_of(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < frontier.size(); ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
        std::vector<SplitCandidate> best(frontier.size(), SplitCandidate{cfg.min_split_gain, -1, 0.0});
        std::vector<ScanState> scan(frontier.size());

        for (std::size_t f = 0; f < n_features; ++f) {
            std::fill(scan.begin(), scan.end(), ScanState{});
            for (auto idx : sorted_rows[f]) {
                auto slot = slot_of[static_cast<std::size_t>(row_node[idx])];
                if (slot < 0) continue;
                auto node = static_cast<std::size_t>(frontier[static_cast<std::size_t>(slot)]);
                auto& s = scan[static_cast<std::size_t>(slot)];
                double v = t.at(idx, f);
                if (s.started && v != s.last_value) {
                    double hl = s.h_left, hr = node_h[node] - s.h_left;
                    if (hl >= cfg.min_child_weight && hr >= cfg.min_child_weight) {
                        double gl = s.g_left, gr = node_g[node] - s.g_left, g = node_g[node];
                        double gain = gl * gl / (hl + cfg.lambda) + gr * gr / (hr + cfg.lambda) -
                                      g * g / (node_h[node] + cfg.lambda);
                        auto& b = best[static_cast<std::size_t>(slot)];
                        if (strictly_better(gain, b.gain)) b = {gain, static_cast<int>(f), midpoint(s.last_value, v)};
                    }
                }
                s.g_left += grad[idx];
                s.h_left += hess[idx];
                s.last_value = v;
                s.started = true;
            }
        }

        std::vector<int> next;
        for (std::size_t s = 0; s < frontier.size(); ++s) {
            if (best[s].feature < 0) continue;
            auto node = static_cast<std::size_t>(frontier[s]);
            int left = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            node_g.resize(tree.nodes.size(), 0.0);
            node_h.resize(tree.nodes.size(), 0.0);
            tree.nodes[node].feature = best[s].feature;
            tree.nodes[node].threshold = best[s].threshold;
            tree.nodes[node].left = left;
            tree.nodes[node].right = left + 1;
            next.push_back(left);
            next.push_back(left + 1);
        }
        if (next.empty()) break;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& parent = tree.nodes[static_cast<std::size_t>(row_node[i])];
            if (parent.is_leaf()) continue;
            int child = t.at(i, static_cast<std::size_t>(parent.feature)) < parent.threshold ? parent.left : parent.right;
            row_node[i] = child;
            auto c = static_cast<std::size_t>(child);
            node_g[c] += grad[i];
            node_h[c] += hess[i];
            tree.nodes[c].samples += 1;
        }
        frontier = std::move(next);
    }

    // Children always have larger indices than their parent, so a reverse
    // pass sees both children before the parent.
    for (std::size_t k = tree.nodes.size(); k-- > 0;) {
        auto& node = tree.nodes[k];
        if (node.is_leaf()) {
            double w = -node_g[k] / (node_h[k] + cfg.lambda);
            node.value = std::clamp(w, -cfg.leaf_clamp, cfg.leaf_clamp);
        } else {
            const auto& l = tree.nodes[static_cast<std::size_t>(node.left)];
            const auto& r = tree.nodes[static_cast<std::size_t>(node.right)];
            node.value = (static_cast<double>(l.samples) * l.value + static_cast<double>(r.samples) * r.value) /
                         static_cast<double>(node.samples);
        }
    }
    return tree;
}

}  // namespace

Ensemble train_gbt(const FeatureTable& t, const GBTConfig& cfg) {
    const auto& labels = require_labels(t, "train_gbt");
    if (t.n_rows() < 2) throw ValidationError("train_gbt requires at least 2 rows");
    auto positives = count_positive(labels);
    if (positives == 0 || positives == labels.size())
        throw ValidationError("train_gbt requires both classes to be present");
    require_finite(t);
    if (cfg.n_trees < 0 || cfg.max_depth < 1 || !(cfg.learning_rate > 0) || cfg.lambda < 0 ||
        cfg.min_child_weight < 0 || !(cfg.leaf_clamp > 0))
        throw ValidationError("invalid GBT configuration");

    const auto n = t.n_rows();
    Ensemble m;
    m.feature_names = t.feature_names();
    m.learning_rate = cfg.learning_rate;
    m.base_score = logit(static_cast<double>(positives) / static_cast<double>(n));

    std::vector<std::vector<std::uint32_t>> sorted_rows(t.n_features());
    for (std::size_t f = 0; f < t.n_features(); ++f) {
        auto& idx = sorted_rows[f];
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0u);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return t.at(a, f) < t.at(b, f); });
    }

    std::vector<double> margin(n, m.base_score), grad(n), hess(n);
    std::vector<int> row_node(n, 0);
    for (int round = 0; round < cfg.n_trees; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            double p = sigmoid(margin[i]);
            grad[i] = p - labels[i];
            hess[i] = std::max(p * (1.0 - p), 1e-16);
        }
        auto tree = build_tree(t, sorted_rows, grad, hess, cfg, row_node);
        for (std::size_t i = 0; i < n; ++i)
            margin[i] += cfg.learning_rate * tree.nodes[static_cast<std::size_t>(row_node[i])].value;
        m.trees.push_back(std::move(tree));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

double LogisticModel::margin(std::span<const double> row) const {
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * row[j];
    return z;
}

double logistic_objective(const LogisticModel& m, const FeatureTable& t, double l2) {
    const auto& labels = require_labels(t, "logistic_objective");
    double loss = 0.0;
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        double z = m.margin(t.row(i));
        // log(1 + e^z) - y z, evaluated stably
        double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        loss += softplus - labels[i] * z;
    }
    loss /= static_cast<double>(t.n_rows());
    double penalty = 0.0;
    for (double w : m.weights) penalty += w * w;
    return loss + 0.5 * l2 * penalty;
}

std::vector<double> logistic_gradient(const LogisticModel& m, const FeatureTable& t, double l2) {
    const auto& labels = require_labels(t, "logistic_gradient");
    const auto k = m.weights.size();
    std::vector<double> g(k + 1, 0.0);
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        auto row = t.row(i);
        double r = sigmoid(m.margin(row)) - labels[i];
        for (std::size_t j = 0; j < k; ++j) g[j] += r * row[j];
        g[k] += r;
    }
    const double inv_n = 1.0 / static_cast<double>(t.n_rows());
    for (std::size_t j = 0; j < k; ++j) g[j] = g[j] * inv_n + l2 * m.weights[j];
    g[k] *= inv_n;
    return g;
}

LogisticModel train_logistic(const FeatureTable& t, const LogisticConfig& cfg) {
    const auto& labels = require_labels(t, "train_logistic");
    if (t.n_rows() == 0) throw ValidationError("train_logistic requires at least one row");
    auto positives = count_positive(labels);
    if (positives == 0 || positives == labels.size())
        throw ValidationError("train_logistic requires both classes to be present");
    require_finite(t);
    if (cfg.l2 < 0 || cfg.max_epochs < 0 || !(cfg.tolerance > 0))
        throw ValidationError("invalid logistic configuration");

    LogisticModel m;
    m.feature_names = t.feature_names();
    m.weights.assign(t.n_features(), 0.0);

    double max_sq = 0.0;
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        double sq = 1.0;
        for (double v : t.row(i)) sq += v * v;
        max_sq = std::max(max_sq, sq);
    }
    const double step = 1.0 / (0.25 * max_sq + cfg.l2);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        auto g = logistic_gradient(m, t, cfg.l2);
        double norm = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
        if (norm < cfg.tolerance) break;
        for (std::size_t j = 0; j < m.weights.size(); ++j) m.weights[j] -= step * g[j];
        m.bias -= step * g.back();
    }
    return m;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

std::vector<double> predict_margin(const Ensemble& m, const FeatureTable& t) {
    auto aligned = t.reorder_columns(m.feature_names);
    std::vector<double> out(aligned.n_rows());
    for (std::size_t i = 0; i < aligned.n_rows(); ++i) out[i] = m.margin(aligned.row(i));
    return out;
}

std::vector<double> predict_proba(const Ensemble& m, const FeatureTable& t) {
    auto out = predict_margin(m, t);
    for (auto& v : out) v = sigmoid(v);
    return out;
}

std::vector<double> predict_proba(const LogisticModel& m, const FeatureTable& t) {
    auto aligned = t.reorder_columns(m.feature_names);
    std::vector<double> out(aligned.n_rows());
    for (std::size_t i = 0; i < aligned.n_rows(); ++i) out[i] = sigmoid(m.margin(aligned.row(i)));
    return out;
}

std::vector<int> classify(std::span<const double> probs, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ValidationError(fmt::format("threshold must lie in (0, 1) (got {})", threshold));
    std::vector<int> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= threshold ? 1 : 0;
    return out;
}

double log_loss(std::span<const int> labels, std::span<const double> probs) {
    if (labels.size() != probs.size() || labels.empty())
        throw ValidationError("log_loss requires equal, non-zero lengths");
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
        sum -= labels[i] ? std::log(p) : std::log1p(-p);
    }
    return sum / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

void check_header(const nlohmann::json& j, std::string_view type) {
    auto version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
        throw ValidationError(fmt::format("unsupported model format_version {}", version));
    auto actual = j.at("type").get<std::string>();
    if (actual != type) throw ValidationError(fmt::format("expected model type '{}', found '{}'", type, actual));
}

}  // namespace

void to_json(nlohmann::json& j, const Ensemble& m) {
    j = nlohmann::json::object();
    j["format_version"] = kModelFormatVersion;
    j["type"] = "gbt";
    j["feature_names"] = m.feature_names;
    j["base_score"] = m.base_score;
    j["learning_rate"] = m.learning_rate;
    auto& trees = j["trees"] = nlohmann::json::array();
    for (const auto& tree : m.trees) {
        auto nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
            if (n.is_leaf())
                nodes.push_back({{"leaf", n.value}, {"samples", n.samples}});
            else
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"value", n.value},
                                 {"samples", n.samples}});
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
}

void from_json(const nlohmann::json& j, Ensemble& m) {
    check_header(j, "gbt");
    j.at("feature_names").get_to(m.feature_names);
    j.at("base_score").get_to(m.base_score);
    j.at("learning_rate").get_to(m.learning_rate);
    m.trees.clear();
    for (const auto& jt : j.at("trees")) {
        auto& tree = m.trees.emplace_back();
        for (const auto& jn : jt.at("nodes")) {
            TreeNode n;
            jn.at("samples").get_to(n.samples);
            if (jn.contains("leaf")) {
                jn.at("leaf").get_to(n.value);
            } else {
                jn.at("feature").get_to(n.feature);
                jn.at("threshold").get_to(n.threshold);
                jn.at("left").get_to(n.left);
                jn.at("right").get_to(n.right);
                jn.at("value").get_to(n.value);
            }
            tree.nodes.push_back(n);
        }
        const auto size = static_cast<int>(tree.nodes.size());
        for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
            const auto& n = tree.nodes[k];
            if (!n.is_leaf() && (n.left <= static_cast<int>(k) || n.right <= static_cast<int>(k) || n.left >= size ||
                                 n.right >= size || n.feature >= static_cast<int>(m.feature_names.size())))
                throw ValidationError("model JSON contains a malformed tree");
        }
    }
}

void to_json(nlohmann::json& j, const LogisticModel& m) {
    j = nlohmann::json{{"format_version", kModelFormatVersion},
                       {"type", "logistic"},
                       {"feature_names", m.feature_names},
                       {"weights", m.weights},
                       {"bias", m.bias}};
}

void from_json(const nlohmann::json& j, LogisticModel& m) {
    check_header(j, "logistic");
    j.at("feature_names").get_to(m.feature_names);
    j.at("weights").get_to(m.weights);
    j.at("bias").get_to(m.bias);
    if (m.weights.size() != m.feature_names.size())
        throw ValidationError("logistic model has mismatched weight and feature counts");
}

}  // namespace timetrail
