#pragma once

// Deliberately naive reference implementations used as test oracles. None
// of these share code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "timetrail/domain.hpp"
#include "timetrail/features.hpp"

namespace oracle {

// Population Pearson straight from the definition, accumulated in long double.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    const auto n = x.size();
    if (n < 2) return std::nullopt;
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    bool x_const = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    bool y_const = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (x_const || y_const) return std::nullopt;
    auto r = static_cast<double>(sxy / std::sqrt(sxx * syy));
    return std::clamp(r, -1.0, 1.0);
}

// O(P*N) pairwise count, ties at half credit.
inline std::optional<double> auc_pairwise(std::span<const int> labels, std::span<const double> scores) {
    double wins = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    if (pairs == 0) return std::nullopt;
    return wins / static_cast<double>(pairs);
}

// For each distinct score from high to low, recount precision and recall
// over the whole sample with "predict positive iff score >= threshold".
inline std::optional<double> ap_naive(std::span<const int> labels, std::span<const double> scores) {
    std::size_t positives = 0;
    for (int l : labels) positives += l == 1;
    if (positives == 0) return std::nullopt;
    std::vector<double> thresholds(scores.begin(), scores.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    double ap = 0, prev_recall = 0;
    for (double t : thresholds) {
        std::size_t tp = 0, predicted = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) {
                ++predicted;
                tp += labels[i] == 1;
            }
        }
        double recall = static_cast<double>(tp) / static_cast<double>(positives);
        double precision = static_cast<double>(tp) / static_cast<double>(predicted);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

// Rows of the same key whose timestamp lies in (t - w, t].
template <typename KeyOf>
std::vector<std::uint32_t> rolling_counts(std::span<const timetrail::Transaction> rows, std::int64_t w, KeyOf key) {
    std::vector<std::uint32_t> out(rows.size(), 0);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.size(); ++j)
            if (key(rows[j]) == key(rows[i]) && rows[j].timestamp <= rows[i].timestamp &&
                rows[j].timestamp > rows[i].timestamp - w)
                ++out[i];
    return out;
}

struct Split {
    int feature = -1;
    double threshold = 0;
    double gain = 0;
};

// Every (feature, midpoint between consecutive distinct values) candidate,
// scored independently. A later candidate must beat the best by more than
// rounding noise, so exact ties keep the lower feature and threshold.
inline Split exhaustive_split(const timetrail::FeatureTable& t, std::span<const double> grad,
                              std::span<const double> hess, double lambda, double min_child_weight) {
    Split best;
    double g_all = 0, h_all = 0;
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        g_all += grad[i];
        h_all += hess[i];
    }
    for (std::size_t f = 0; f < t.n_features(); ++f) {
        auto col = t.column(f);
        std::vector<double> distinct = col;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (std::size_t k = 0; k + 1 < distinct.size(); ++k) {
            double thr = distinct[k] + (distinct[k + 1] - distinct[k]) / 2.0;
            double gl = 0, hl = 0;
            for (std::size_t i = 0; i < col.size(); ++i)
                if (col[i] < thr) {
                    gl += grad[i];
                    hl += hess[i];
                }
            double gr = g_all - gl, hr = h_all - hl;
            if (hl < min_child_weight || hr < min_child_weight) continue;
            double gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g_all * g_all / (h_all + lambda);
            if (gain > best.gain + 1e-12 * std::max(1.0, std::abs(best.gain))) best = {static_cast<int>(f), thr, gain};
        }
    }
    return best;
}

inline timetrail::Transaction tx(std::string id, timetrail::Timestamp t, std::string user = "u1",
                                 std::string terminal = "t1", double amount = 10.0,
                                 std::optional<timetrail::Label> label = timetrail::Label::legit) {
    timetrail::Transaction r;
    r.tx_id = std::move(id);
    r.timestamp = t;
    r.user_id = std::move(user);
    r.terminal_id = std::move(terminal);
    r.amount = amount;
    r.label = label;
    return r;
}

// Random labeled transactions over a few users and terminals; tx_ids sort
// with time.
inline timetrail::Dataset random_dataset(std::mt19937_64& rng, std::size_t n, timetrail::Timestamp span_seconds,
                                         int users = 5, int terminals = 3) {
    std::uniform_int_distribution<timetrail::Timestamp> t(1'700'000'000, 1'700'000'000 + span_seconds);
    std::uniform_int_distribution<int> u(0, users - 1), term(0, terminals - 1), type(0, 3);
    std::uniform_real_distribution<double> amount(0.0, 500.0);
    std::bernoulli_distribution fraud(0.1);
    std::vector<timetrail::Transaction> rows;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = tx(fmt::format("x{:06d}", i), t(rng), fmt::format("u{}", u(rng)), fmt::format("t{}", term(rng)),
                    std::round(amount(rng) * 100) / 100,
                    fraud(rng) ? timetrail::Label::fraud : timetrail::Label::legit);
        r.tx_type = static_cast<timetrail::TxType>(type(rng));
        rows.push_back(std::move(r));
    }
    return timetrail::Dataset(std::move(rows));
}

inline std::filesystem::path fresh_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / fmt::format("timetrail_test_{}", name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace oracle
