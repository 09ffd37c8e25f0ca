#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "timetrail/features.hpp"

namespace timetrail {

inline constexpr int kModelFormatVersion = 1;

double sigmoid(double z);
double logit(double p);

// Keeps every minority-class row and ceil(ratio * minority) majority rows
// drawn without replacement (all of them if fewer exist). Selected rows keep
// their original relative order. Throws ValidationError when the table is
// unlabeled, ratio < 1, or the minority class is empty.
FeatureTable undersample(const FeatureTable& t, double majority_ratio, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gradient-boosted trees (logistic loss, exact greedy splits)
// ---------------------------------------------------------------------------

struct GBTConfig {
    int n_trees = 200;
    int max_depth = 4;
    double learning_rate = 0.1;
    double lambda = 1.0;            // L2 on leaf weights
    double min_child_weight = 1.0;  // minimum hessian mass per child
    double min_split_gain = 0.0;    // a split must strictly exceed this
    double leaf_clamp = 10.0;       // |leaf weight| bound
};

// Internal nodes route `x[feature] < threshold` to `left`. `value` is the
// mean tree output over the training rows that reached the node (the leaf
// weight itself for leaves); `samples` counts those rows.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::size_t samples = 0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    std::size_t leaf_for(std::span<const double> row) const;
    double predict(std::span<const double> row) const { return nodes[leaf_for(row)].value; }
    int depth() const;
};

struct Ensemble {
    std::vector<std::string> feature_names;
    double base_score = 0.0;  // initial log-odds
    double learning_rate = 0.1;
    std::vector<Tree> trees;

    // base_score + learning_rate * sum of leaf weights; `row` is in
    // feature_names order.
    double margin(std::span<const double> row) const;
};

// Throws ValidationError on unlabeled or single-class input, fewer than two
// rows, non-finite features, or an invalid config.
Ensemble train_gbt(const FeatureTable& t, const GBTConfig& cfg = {});

// ---------------------------------------------------------------------------
// Logistic regression baseline
// ---------------------------------------------------------------------------

struct LogisticConfig {
    double l2 = 0.01;  // penalty (l2 / 2) * |w|^2; the bias is not penalized
    int max_epochs = 20000;
    double tolerance = 1e-6;  // stop when the gradient norm falls below this
};

struct LogisticModel {
    std::vector<std::string> feature_names;
    std::vector<double> weights;
    double bias = 0.0;

    double margin(std::span<const double> row) const;
};

// Mean log-loss plus the L2 penalty, and its analytic gradient (weights
// followed by the bias).
double logistic_objective(const LogisticModel& m, const FeatureTable& t, double l2);
std::vector<double> logistic_gradient(const LogisticModel& m, const FeatureTable& t, double l2);

// Full-batch gradient descent with step 1/L for the Lipschitz bound
// L = max_i(|x_i|^2 + 1) / 4 + l2, from zero initialization.
LogisticModel train_logistic(const FeatureTable& t, const LogisticConfig& cfg = {});

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

// Columns are matched by name; throws ValidationError naming missing and
// extra features.
std::vector<double> predict_margin(const Ensemble& m, const FeatureTable& t);
std::vector<double> predict_proba(const Ensemble& m, const FeatureTable& t);
std::vector<double> predict_proba(const LogisticModel& m, const FeatureTable& t);

// 1 iff prob >= threshold; threshold must lie in (0, 1).
std::vector<int> classify(std::span<const double> probs, double threshold);

double log_loss(std::span<const int> labels, std::span<const double> probs);

void to_json(nlohmann::json& j, const Ensemble& m);
void from_json(const nlohmann::json& j, Ensemble& m);
void to_json(nlohmann::json& j, const LogisticModel& m);
void from_json(const nlohmann::json& j, LogisticModel& m);

}  // namespace timetrail
