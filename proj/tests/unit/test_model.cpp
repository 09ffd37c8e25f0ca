#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "timetrail/error.hpp"
#include "timetrail/model.hpp"

using namespace timetrail;

namespace {

// x in [-1, -0.1] is legit, x in [0.1, 1] is fraud.
FeatureTable separable(std::size_t n = 20) {
    std::vector<double> v;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
        double x = 0.1 + 0.9 * static_cast<double>(i / 2) / static_cast<double>(n / 2);
        v.push_back(i % 2 ? x : -x);
        y.push_back(i % 2 ? 1 : 0);
    }
    return FeatureTable({"x"}, v, y);
}

FeatureTable random_table(std::mt19937_64& rng, std::size_t n, std::size_t f, double pos_rate = 0.3) {
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> coarse(0, 4);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < f; ++j) names.push_back(fmt::format("f{}", j));
    std::vector<double> v;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < f; ++j) {
            double x = j % 2 ? coarse(rng) / 4.0 : u(rng);
            v.push_back(x);
            s += x;
        }
        y.push_back(u(rng) < pos_rate + 0.3 * (s / static_cast<double>(f) - 0.5) ? 1 : 0);
    }
    y[0] = 1;
    y[1] = 0;
    return FeatureTable(names, v, y);
}

double train_accuracy(const std::vector<double>& p, const FeatureTable& t) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < p.size(); ++i) ok += (p[i] >= 0.5) == ((*t.labels())[i] == 1);
    return static_cast<double>(ok) / static_cast<double>(p.size());
}

}  // namespace

TEST(Undersample, KeepsMinorityAndExactMajorityCount) {
    std::vector<double> v(1010);
    std::vector<int> y(1010, 0);
    for (std::size_t i = 0; i < 1010; ++i) v[i] = static_cast<double>(i);
    for (std::size_t i = 0; i < 10; ++i) y[i * 100] = 1;
    FeatureTable t({"x"}, v, y);
    auto s = undersample(t, 5, 99);
    std::size_t pos = 0, neg = 0;
    for (int l : *s.labels()) (l ? pos : neg)++;
    EXPECT_EQ(pos, 10u);
    EXPECT_EQ(neg, 50u);
    auto col = s.column(0);
    EXPECT_TRUE(std::is_sorted(col.begin(), col.end()));
    EXPECT_EQ(undersample(t, 5, 99).values().size(), s.values().size());
    auto again = undersample(t, 5, 99);
    EXPECT_TRUE(std::equal(again.values().begin(), again.values().end(), s.values().begin()));
}

TEST(Undersample, SaturatesAndValidates) {
    FeatureTable t({"x"}, {1, 2, 3, 4}, std::vector<int>{0, 1, 0, 0});
    EXPECT_EQ(undersample(t, 1000, 1).n_rows(), 4u);
    EXPECT_THROW(undersample(FeatureTable({"x"}, {1, 2}, std::vector<int>{0, 0}), 2, 1), ValidationError);
    EXPECT_THROW(undersample(t, 0.5, 1), ValidationError);
    EXPECT_THROW(undersample(FeatureTable({"x"}, {1, 2}), 2, 1), ValidationError);
}

TEST(Undersample, FractionalRatioRoundsUp) {
    std::vector<double> v(100, 0.0);
    std::vector<int> y(100, 0);
    y[3] = y[7] = y[11] = 1;
    auto s = undersample(FeatureTable({"x"}, v, y), 2.5, 4);
    EXPECT_EQ(s.n_rows(), 3u + 8u);
}

TEST(Gbt, SeparableStumpsReachPerfectAccuracy) {
    auto t = separable();
    GBTConfig cfg;
    cfg.n_trees = 10;
    cfg.max_depth = 1;
    auto m = train_gbt(t, cfg);
    EXPECT_EQ(train_accuracy(predict_proba(m, t), t), 1.0);
    ASSERT_FALSE(m.trees.empty());
    const auto& root = m.trees[0].nodes[0];
    EXPECT_EQ(root.feature, 0);
    EXPECT_DOUBLE_EQ(root.threshold, 0.0);
    auto p = predict_proba(m, t);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i] > 0.5, (*t.labels())[i] == 1);
}

TEST(Gbt, EmptyEnsemblePredictsPrior) {
    FeatureTable t({"x"}, {1, 2, 3, 4}, std::vector<int>{0, 1, 0, 0});
    GBTConfig cfg;
    cfg.n_trees = 0;
    auto m = train_gbt(t, cfg);
    for (double p : predict_proba(m, t)) EXPECT_NEAR(p, 0.25, 1e-15);
    FeatureTable even({"x"}, {1, 2}, std::vector<int>{0, 1});
    for (double p : predict_proba(train_gbt(even, cfg), even)) EXPECT_EQ(p, 0.5);
}

TEST(Gbt, LabelConstantFeatureNeverChanges) {
    auto t = separable();
    std::vector<double> v;
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        v.push_back(t.at(i, 0));
        v.push_back(3.0);
    }
    FeatureTable wide({"x", "c"}, v, t.labels());
    auto a = predict_proba(train_gbt(t), t);
    auto b = predict_proba(train_gbt(wide), wide);
    EXPECT_EQ(a, b);
}

TEST(Gbt, LeafClampBoundsOutput) {
    auto t = separable(40);
    GBTConfig cfg;
    cfg.n_trees = 1;
    cfg.max_depth = 1;
    cfg.learning_rate = 1.0;
    cfg.lambda = 0.0;
    cfg.min_child_weight = 0.0;
    cfg.leaf_clamp = 0.5;
    auto m = train_gbt(t, cfg);
    for (const auto& n : m.trees[0].nodes)
        if (n.is_leaf()) EXPECT_LE(std::abs(n.value), 0.5);
    for (double p : predict_proba(m, t)) EXPECT_LE(p, sigmoid(m.base_score + 0.5) + 1e-15);
}

TEST(Gbt, TrainingLossNonIncreasingPerRound) {
    std::mt19937_64 rng(17);
    for (auto t : {separable(30), random_table(rng, 120, 3)}) {
        GBTConfig cfg;
        cfg.n_trees = 60;
        cfg.learning_rate = 0.3;
        auto m = train_gbt(t, cfg);
        Ensemble partial = m;
        partial.trees.clear();
        double prev = log_loss(*t.labels(), predict_proba(partial, t));
        for (const auto& tree : m.trees) {
            partial.trees.push_back(tree);
            double cur = log_loss(*t.labels(), predict_proba(partial, t));
            EXPECT_LE(cur, prev + 1e-12);
            prev = cur;
        }
    }
}

TEST(Gbt, FirstSplitMatchesExhaustiveSearch) {
    std::mt19937_64 rng(19);
    std::uniform_int_distribution<std::size_t> rows(8, 50), feats(1, 4);
    for (int trial = 0; trial < 200; ++trial) {
        auto t = random_table(rng, rows(rng), feats(rng));
        GBTConfig cfg;
        cfg.n_trees = 1;
        cfg.max_depth = 1;
        auto m = train_gbt(t, cfg);
        double p = sigmoid(m.base_score);
        std::vector<double> g(t.n_rows()), h(t.n_rows(), p * (1 - p));
        for (std::size_t i = 0; i < t.n_rows(); ++i) g[i] = p - (*t.labels())[i];
        auto want = oracle::exhaustive_split(t, g, h, cfg.lambda, cfg.min_child_weight);
        const auto& root = m.trees[0].nodes[0];
        if (want.feature < 0) {
            EXPECT_TRUE(root.is_leaf()) << "trial " << trial;
            continue;
        }
        ASSERT_FALSE(root.is_leaf()) << "trial " << trial;
        EXPECT_EQ(root.feature, want.feature) << "trial " << trial;
        EXPECT_DOUBLE_EQ(root.threshold, want.threshold) << "trial " << trial;
    }
}

TEST(Gbt, DepthAndSampleCountsConsistent) {
    std::mt19937_64 rng(23);
    auto t = random_table(rng, 300, 4);
    auto m = train_gbt(t);
    EXPECT_EQ(m.trees.size(), 200u);
    for (const auto& tree : m.trees) {
        EXPECT_LE(tree.depth(), 4);
        EXPECT_EQ(tree.nodes[0].samples, t.n_rows());
        for (const auto& n : tree.nodes)
            if (!n.is_leaf())
                EXPECT_EQ(n.samples, tree.nodes[n.left].samples + tree.nodes[n.right].samples);
    }
}

TEST(Gbt, DeterministicSerializationAndJsonRoundTrip) {
    std::mt19937_64 rng(29);
    auto t = random_table(rng, 200, 3);
    nlohmann::json a = train_gbt(t), b = train_gbt(t);
    EXPECT_EQ(a.dump(), b.dump());
    auto m = a.get<Ensemble>();
    nlohmann::json c = m;
    EXPECT_EQ(c.dump(), a.dump());
    EXPECT_EQ(predict_margin(m, t), predict_margin(train_gbt(t), t));
}

TEST(Gbt, PermutedColumnsPredictIdentically) {
    std::mt19937_64 rng(31);
    auto t = random_table(rng, 150, 4);
    auto m = train_gbt(t);
    auto p = t.reorder_columns({"f3", "f1", "f0", "f2"});
    EXPECT_EQ(predict_margin(m, t), predict_margin(m, p));
}

TEST(Gbt, SchemaMismatchNamesFeatures) {
    auto t = separable();
    auto m = train_gbt(t);
    try {
        predict_proba(m, FeatureTable({"y"}, {1.0}));
        FAIL();
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("x"), std::string::npos);
        EXPECT_NE(msg.find("y"), std::string::npos);
    }
}

TEST(Gbt, InvalidInputsRejected) {
    EXPECT_THROW(train_gbt(FeatureTable({"x"}, {1, 2}, std::vector<int>{1, 1})), ValidationError);
    EXPECT_THROW(train_gbt(FeatureTable({"x"}, {1, std::nan("")}, std::vector<int>{0, 1})), ValidationError);
    EXPECT_THROW(train_gbt(FeatureTable({"x"}, {1, 2})), ValidationError);
}

TEST(Logistic, GradientMatchesCentralDifferences) {
    std::mt19937_64 rng(37);
    std::normal_distribution<double> nd(0, 1);
    std::uniform_int_distribution<std::size_t> rows(5, 30), feats(1, 5);
    for (int trial = 0; trial < 100; ++trial) {
        auto t = random_table(rng, rows(rng), feats(rng));
        LogisticModel m{t.feature_names(), std::vector<double>(t.n_features()), nd(rng)};
        for (auto& w : m.weights) w = nd(rng);
        double l2 = 0.01 * static_cast<double>(trial % 5);
        auto g = logistic_gradient(m, t, l2);
        ASSERT_EQ(g.size(), t.n_features() + 1);
        for (std::size_t k = 0; k < g.size(); ++k) {
            auto param = [&](LogisticModel& mm) -> double& { return k < mm.weights.size() ? mm.weights[k] : mm.bias; };
            const double h = 1e-6;
            auto plus = m, minus = m;
            param(plus) += h;
            param(minus) -= h;
            double fd = (logistic_objective(plus, t, l2) - logistic_objective(minus, t, l2)) / (2 * h);
            EXPECT_LT(std::abs(fd - g[k]) / std::max(1e-6, std::abs(g[k]) + std::abs(fd)), 1e-5)
                << "trial " << trial << " param " << k;
        }
    }
}

TEST(Logistic, SeparableDataFitsPerfectly) {
    auto t = separable();
    LogisticConfig cfg;
    cfg.l2 = 0.1;
    auto m = train_logistic(t, cfg);
    EXPECT_EQ(train_accuracy(predict_proba(m, t), t), 1.0);
    EXPECT_GT(m.weights[0], 0.0);
}

TEST(Logistic, ZeroFeaturesGivePriorLogOdds) {
    FeatureTable t({"a", "b"}, std::vector<double>(16, 0.0), std::vector<int>{1, 0, 0, 0, 1, 0, 0, 0});
    LogisticConfig cfg;
    cfg.tolerance = 1e-12;
    auto m = train_logistic(t, cfg);
    EXPECT_EQ(m.weights, (std::vector<double>{0.0, 0.0}));
    EXPECT_NEAR(m.bias, std::log(0.25 / 0.75), 1e-10);
}

TEST(Logistic, JsonRoundTrip) {
    auto m = train_logistic(separable());
    nlohmann::json j = m;
    auto back = j.get<LogisticModel>();
    EXPECT_EQ(back.weights, m.weights);
    EXPECT_EQ(back.bias, m.bias);
}

TEST(Classify, ThresholdIsInclusive) {
    std::vector<double> p{0.2, 0.5, 0.9};
    EXPECT_EQ(classify(p, 0.5), (std::vector<int>{0, 1, 1}));
    EXPECT_EQ(classify(p, 1e-12), (std::vector<int>{1, 1, 1}));
    EXPECT_EQ(classify(p, 1 - 1e-12), (std::vector<int>{0, 0, 0}));
    EXPECT_THROW(classify(p, 0.0), ValidationError);
    EXPECT_THROW(classify(p, 1.0), ValidationError);
}

TEST(Sigmoid, StableAtExtremesAndInvertsLogit) {
    EXPECT_EQ(sigmoid(-1000), 0.0);
    EXPECT_EQ(sigmoid(1000), 1.0);
    EXPECT_NEAR(sigmoid(logit(0.3)), 0.3, 1e-15);
}
