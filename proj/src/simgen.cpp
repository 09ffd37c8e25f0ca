#include "timetrail/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "json_fields.hpp"
#include "timetrail/error.hpp"

namespace timetrail {

namespace {

constexpr std::int64_t kHour = 3600;
constexpr std::int64_t kDay = 86400;

// Relative legit intensity per UTC hour.
constexpr std::array<double, 24> kDiurnal = {0.30, 0.15, 0.10, 0.10, 0.15, 0.30, 0.80, 1.50,
                                             2.20, 2.60, 2.80, 3.00, 3.20, 3.00, 2.80, 2.80,
                                             3.00, 3.20, 3.00, 2.60, 2.00, 1.50, 1.00, 0.60};
constexpr std::array<double, 4> kTypeWeights = {0.70, 0.15, 0.10, 0.05};
constexpr double kHomeTerminalShare = 0.85;
constexpr double kMinAmount = 1.0;

constexpr std::array<std::string_view, kScenarioCount> kScenarioNames = {
    "burst", "night_owl", "new_account_abuse", "terminal_compromise", "amount_spike"};

using Rng = std::mt19937_64;

std::string user_name(std::size_t u) { return fmt::format("u{:06d}", u); }
std::string new_account_name(std::size_t k) { return fmt::format("n{:06d}", k); }
std::string terminal_name(std::size_t t) { return fmt::format("t{:05d}", t); }

Timestamp floor_day(Timestamp t) { return t - ((t % kDay) + kDay) % kDay; }

// [lo, hi)
Timestamp uniform_time(Rng& rng, Timestamp lo, Timestamp hi) {
    return std::uniform_int_distribution<Timestamp>(lo, hi - 1)(rng);
}

template <typename T>
T uniform_int(Rng& rng, T lo, T hi) {
    return std::uniform_int_distribution<T>(lo, hi)(rng);
}

double round_cents(double x) { return std::round(x * 100.0) / 100.0; }

double draw_amount(Rng& rng, double scale) {
    return std::max(kMinAmount, round_cents(scale * std::lognormal_distribution<double>(0.0, 0.5)(rng)));
}

TxType draw_type(Rng& rng) {
    return static_cast<TxType>(std::discrete_distribution<int>(kTypeWeights.begin(), kTypeWeights.end())(rng));
}

struct UserProfile {
    double activity = 1.0;
    double scale = 30.0;
    std::array<std::size_t, 2> home{};
};

// Consumes the first draws of a user's stream; legit generation continues
// on the same stream afterwards.
UserProfile draw_profile(Rng& rng, std::size_t n_terminals) {
    UserProfile p;
    p.activity = std::lognormal_distribution<double>(0.0, 0.7)(rng);
    p.scale = std::lognormal_distribution<double>(3.5, 0.8)(rng);
    p.home[0] = uniform_int<std::size_t>(rng, 0, n_terminals - 1);
    p.home[1] = uniform_int<std::size_t>(rng, 0, n_terminals - 1);
    return p;
}

std::size_t draw_terminal(Rng& rng, const UserProfile& p, std::size_t n_terminals) {
    if (std::bernoulli_distribution(kHomeTerminalShare)(rng)) return p.home[std::bernoulli_distribution(0.3)(rng)];
    return uniform_int<std::size_t>(rng, 0, n_terminals - 1);
}

Transaction make_row(Timestamp t, std::string user, std::size_t terminal, double amount, TxType type,
                     std::optional<Scenario> fraud) {
    Transaction tx;
    tx.timestamp = t;
    tx.user_id = std::move(user);
    tx.terminal_id = terminal_name(terminal);
    tx.amount = amount;
    tx.tx_type = type;
    tx.label = fraud ? Label::fraud : Label::legit;
    if (fraud) tx.scenario = std::string(to_string(*fraud));
    return tx;
}

struct PendingSpike {
    std::size_t row = 0;  // index into Planner::rows
    std::size_t user = 0;
};

// Fraud events and the legit rows they require, drawn from the plan stream.
class Planner {
public:
    Planner(const ScenarioConfig& cfg, const std::vector<UserProfile>& profiles)
        : cfg_(cfg), profiles_(profiles), rng_(stream_seed(cfg.seed, 0)) {}

    void plan(Scenario s, std::size_t quota) {
        while (quota > 0) quota -= event(s, quota);
    }

    std::vector<Transaction> rows;
    std::vector<PendingSpike> spikes;
    std::size_t structural_legit = 0;

private:
    std::size_t any_user() { return uniform_int<std::size_t>(rng_, 0, cfg_.n_users - 1); }
    std::size_t any_terminal() { return uniform_int<std::size_t>(rng_, 0, cfg_.n_terminals - 1); }

    void legit(Timestamp t, std::size_t u) {
        const auto& p = profiles_[u];
        auto terminal = draw_terminal(rng_, p, cfg_.n_terminals);
        auto amount = draw_amount(rng_, p.scale);
        rows.push_back(make_row(t, user_name(u), terminal, amount, draw_type(rng_), std::nullopt));
        ++structural_legit;
    }

    void fraud(Timestamp t, std::string user, std::size_t terminal, double amount, Scenario s) {
        rows.push_back(make_row(t, std::move(user), terminal, amount, draw_type(rng_), s));
    }

    // Returns the number of fraud rows emitted, at most `room`.
    std::size_t event(Scenario s, std::size_t room) {
        const Timestamp start = cfg_.period_start, end = cfg_.period_end;
        switch (s) {
            case Scenario::burst: {
                auto n = std::min<std::size_t>(room, uniform_int<std::size_t>(rng_, 3, 8));
                auto u = any_user();
                Timestamp t0 = uniform_time(rng_, start + kDay, end - kDay);
                for (int k = 0; k < 5; ++k) legit(uniform_time(rng_, t0 - 12 * kHour, t0), u);
                Timestamp t = t0;
                for (std::size_t k = 0; k < n; ++k) {
                    t += uniform_int<Timestamp>(rng_, 120, 900);
                    fraud(t, user_name(u), any_terminal(), draw_amount(rng_, profiles_[u].scale), s);
                }
                return n;
            }
            case Scenario::night_owl: {
                auto n = std::min<std::size_t>(room, uniform_int<std::size_t>(rng_, 2, 4));
                auto u = any_user();
                Timestamp first = floor_day(start + kDay - 1);
                Timestamp last = floor_day(end - 6 * kHour);
                Timestamp day = first + kDay * uniform_int<Timestamp>(rng_, 0, (last - first) / kDay);
                Timestamp t = day + kHour + uniform_time(rng_, 0, 3 * kHour);
                auto terminal = any_terminal();
                for (std::size_t k = 0; k < n; ++k) {
                    if (k > 0) t += uniform_int<Timestamp>(rng_, 300, 1800);
                    fraud(t, user_name(u), terminal, draw_amount(rng_, profiles_[u].scale), s);
                }
                return n;
            }
            case Scenario::new_account_abuse: {
                auto n = std::min<std::size_t>(room, uniform_int<std::size_t>(rng_, 3, 6));
                auto user = new_account_name(new_accounts_++);
                double scale = std::lognormal_distribution<double>(3.5, 0.8)(rng_);
                Timestamp t0 = uniform_time(rng_, start, end - kDay);
                for (std::size_t k = 0; k < n; ++k)
                    fraud(t0 + uniform_time(rng_, 0, kDay), user, any_terminal(), draw_amount(rng_, scale), s);
                return n;
            }
            case Scenario::terminal_compromise: {
                auto n = std::min<std::size_t>(room, uniform_int<std::size_t>(rng_, 5, 12));
                auto terminal = any_terminal();
                Timestamp t0 = uniform_time(rng_, start, end - 3 * kHour);
                std::unordered_set<std::size_t> victims;
                while (victims.size() < n) {
                    auto u = any_user();
                    if (!victims.insert(u).second) continue;
                    fraud(t0 + uniform_time(rng_, 0, 3 * kHour), user_name(u), terminal,
                          draw_amount(rng_, profiles_[u].scale), s);
                }
                return n;
            }
            case Scenario::amount_spike: {
                auto u = any_user();
                Timestamp t0 = uniform_time(rng_, start + 7 * kDay, end);
                for (int k = 0; k < 2; ++k) legit(uniform_time(rng_, t0 - 7 * kDay, t0 - kHour), u);
                spikes.push_back({rows.size(), u});
                fraud(t0, user_name(u), any_terminal(), 0.0, s);  // amount set once history is known
                return 1;
            }
        }
        return 0;
    }

    const ScenarioConfig& cfg_;
    const std::vector<UserProfile>& profiles_;
    Rng rng_;
    std::size_t new_accounts_ = 0;
};

void legit_rows_for_user(const ScenarioConfig& cfg, std::size_t u, std::size_t count, std::vector<Transaction>& out) {
    Rng rng(stream_seed(cfg.seed, u + 1));
    auto p = draw_profile(rng, cfg.n_terminals);
    const Timestamp day0 = floor_day(cfg.period_start);
    const Timestamp n_days = (floor_day(cfg.period_end - 1) - day0) / kDay + 1;
    std::discrete_distribution<int> hour(kDiurnal.begin(), kDiurnal.end());
    auto name = user_name(u);
    for (std::size_t i = 0; i < count; ++i) {
        Timestamp t;
        do {
            t = day0 + kDay * uniform_int<Timestamp>(rng, 0, n_days - 1) + kHour * hour(rng) +
                uniform_int<Timestamp>(rng, 0, kHour - 1);
        } while (t < cfg.period_start || t >= cfg.period_end);
        auto terminal = draw_terminal(rng, p, cfg.n_terminals);
        auto amount = draw_amount(rng, p.scale);
        out.push_back(make_row(t, name, terminal, amount, draw_type(rng), std::nullopt));
    }
}

// Spike amount: 10-20x the largest amount of the victim within the 30 days
// up to the spike, which bounds the ratio to the prior mean from below.
void settle_spikes(const ScenarioConfig& cfg, std::vector<Transaction>& planned, std::vector<PendingSpike> spikes,
                   std::span<const Transaction> legit, std::span<const std::size_t> legit_offsets) {
    Rng rng(stream_seed(cfg.seed, cfg.n_users + 1));
    std::sort(spikes.begin(), spikes.end(), [&](const auto& a, const auto& b) {
        return std::tie(planned[a.row].timestamp, a.row) < std::tie(planned[b.row].timestamp, b.row);
    });
    for (const auto& s : spikes) {
        auto& row = planned[s.row];
        const Timestamp lo = row.timestamp - 30 * kDay;
        double largest = kMinAmount;
        auto consider = [&](const Transaction& tx) {
            if (&tx != &row && tx.timestamp >= lo && tx.timestamp <= row.timestamp) largest = std::max(largest, tx.amount);
        };
        for (auto i = legit_offsets[s.user]; i < legit_offsets[s.user + 1]; ++i) consider(legit[i]);
        for (const auto& tx : planned)
            if (tx.user_id == row.user_id) consider(tx);
        row.amount = round_cents(largest * std::uniform_real_distribution<double>(10.0, 20.0)(rng));
    }
}

}  // namespace

std::string_view to_string(Scenario s) { return kScenarioNames[static_cast<std::size_t>(s)]; }

Scenario parse_scenario(std::string_view s) {
    for (std::size_t i = 0; i < kScenarioCount; ++i)
        if (kScenarioNames[i] == s) return kAllScenarios[i];
    throw ValidationError(fmt::format("unknown scenario '{}'", s));
}

std::uint64_t stream_seed(std::uint64_t root, std::uint64_t stream) {
    // splitmix64 finalizer over the root advanced by the stream index
    std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::size_t fraud_row_count(const ScenarioConfig& cfg) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(cfg.target_rows) * cfg.fraud_rate));
}

std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const double> weights) {
    double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> out(weights.size(), 0);
    if (weights.empty() || !(sum > 0)) return out;
    std::vector<double> remainder(weights.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double exact = static_cast<double>(total) * weights[i] / sum;
        out[i] = static_cast<std::size_t>(std::floor(exact));
        remainder[i] = exact - static_cast<double>(out[i]);
        assigned += out[i];
    }
    std::vector<std::size_t> idx(weights.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[idx[k % idx.size()]];
    return out;
}

void validate(const ScenarioConfig& cfg) {
    auto bad = [](std::string_view field, std::string_view why) {
        throw ValidationError(fmt::format("invalid config field '{}': {}", field, why));
    };
    if (cfg.n_users < 12) bad("n_users", "must be at least 12");
    if (cfg.n_terminals < 1) bad("n_terminals", "must be positive");
    if (cfg.period_end <= cfg.period_start) bad("period", "end must be after start");
    if (cfg.period_end - cfg.period_start < 14 * kDay) bad("period", "must span at least 14 days");
    if (cfg.target_rows == 0) bad("target_rows", "must be positive");
    if (!(cfg.fraud_rate > 0.0 && cfg.fraud_rate < 1.0)) bad("fraud_rate", "must lie in (0, 1)");
    double sum = 0.0;
    for (double w : cfg.scenario_mix) {
        if (!(w >= 0.0) || !std::isfinite(w)) bad("scenario_mix", "weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) bad("scenario_mix", fmt::format("weights sum to {}, expected 1", sum));
    if (fraud_row_count(cfg) == 0)
        bad("target_rows", "target_rows * fraud_rate rounds to 0 fraud rows; use a larger target_rows");
}

Dataset generate(const ScenarioConfig& cfg) {
    validate(cfg);
    const auto n_fraud = fraud_row_count(cfg);

    std::vector<UserProfile> profiles(cfg.n_users);
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
        Rng rng(stream_seed(cfg.seed, u + 1));
        profiles[u] = draw_profile(rng, cfg.n_terminals);
    }

    Planner planner(cfg, profiles);
    auto quotas = largest_remainder(n_fraud, cfg.scenario_mix);
    for (std::size_t s = 0; s < kScenarioCount; ++s) planner.plan(kAllScenarios[s], quotas[s]);

    const auto fixed = n_fraud + planner.structural_legit;
    if (fixed > cfg.target_rows)
        throw ValidationError(fmt::format(
            "invalid config field 'target_rows': the fraud plan needs {} rows but target_rows is {}", fixed,
            cfg.target_rows));

    std::vector<double> activity(cfg.n_users);
    for (std::size_t u = 0; u < cfg.n_users; ++u) activity[u] = profiles[u].activity;
    auto per_user = largest_remainder(cfg.target_rows - fixed, activity);

    std::vector<Transaction> legit;
    legit.reserve(cfg.target_rows - fixed);
    std::vector<std::size_t> offsets(cfg.n_users + 1, 0);
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
        legit_rows_for_user(cfg, u, per_user[u], legit);
        offsets[u + 1] = legit.size();
    }
    settle_spikes(cfg, planner.rows, planner.spikes, legit, offsets);

    std::vector<Transaction> rows = std::move(legit);
    rows.reserve(cfg.target_rows);
    std::move(planner.rows.begin(), planner.rows.end(), std::back_inserter(rows));

    // Canonical order over full content, then ids that sort the same way.
    std::sort(rows.begin(), rows.end(), [](const Transaction& a, const Transaction& b) {
        return std::tie(a.timestamp, a.user_id, a.terminal_id, a.amount, a.tx_type, a.label, a.scenario) <
               std::tie(b.timestamp, b.user_id, b.terminal_id, b.amount, b.tx_type, b.label, b.scenario);
    });
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].tx_id = fmt::format("tx{:09d}", i + 1);
    return Dataset(std::move(rows));
}

DatasetSummary describe(const Dataset& d) {
    DatasetSummary s;
    s.rows = d.size();
    s.fraud_count = d.meta().fraud_count;
    s.fraud_rate = d.meta().fraud_rate;
    for (const auto& tx : d.rows())
        if (tx.is_fraud()) ++s.per_scenario[tx.scenario];
    if (d.empty()) return s;
    const Timestamp first = floor_day(d.meta().t_min);
    s.per_day.resize(static_cast<std::size_t>((floor_day(d.meta().t_max) - first) / kDay + 1));
    for (std::size_t k = 0; k < s.per_day.size(); ++k) s.per_day[k].first = first + static_cast<Timestamp>(k) * kDay;
    for (const auto& tx : d.rows()) ++s.per_day[static_cast<std::size_t>((tx.timestamp - first) / kDay)].second;
    return s;
}

void to_json(nlohmann::json& j, const DatasetSummary& s) {
    auto days = nlohmann::json::array();
    for (const auto& [day, n] : s.per_day) days.push_back({{"day", format_iso8601(day)}, {"rows", n}});
    j = nlohmann::json{{"rows", s.rows},
                       {"fraud_count", s.fraud_count},
                       {"fraud_rate", s.fraud_rate ? nlohmann::json(*s.fraud_rate) : nlohmann::json(nullptr)},
                       {"per_scenario", s.per_scenario},
                       {"per_day", std::move(days)}};
}

void to_json(nlohmann::json& j, const ScenarioConfig& c) {
    auto mix = nlohmann::json::object();
    for (std::size_t i = 0; i < kScenarioCount; ++i) mix[std::string(kScenarioNames[i])] = c.scenario_mix[i];
    j = nlohmann::json{{"n_users", c.n_users},
                       {"n_terminals", c.n_terminals},
                       {"period", {{"start", c.period_start}, {"end", c.period_end}}},
                       {"target_rows", c.target_rows},
                       {"fraud_rate", c.fraud_rate},
                       {"scenario_mix", std::move(mix)},
                       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ScenarioConfig& c) {
    using namespace detail;
    reject_unknown(j, "", {"n_users", "n_terminals", "period", "target_rows", "fraud_rate", "scenario_mix", "seed"});
    optional_field(j, "", "n_users", c.n_users, read_u64);
    optional_field(j, "", "n_terminals", c.n_terminals, read_u64);
    optional_field(j, "", "target_rows", c.target_rows, read_u64);
    optional_field(j, "", "fraud_rate", c.fraud_rate, read_double);
    optional_field(j, "", "seed", c.seed, read_u64);
    if (auto it = j.find("period"); it != j.end()) {
        reject_unknown(*it, "period", {"start", "end"});
        optional_field(*it, "period", "start", c.period_start, read_time);
        optional_field(*it, "period", "end", c.period_end, read_time);
    }
    if (auto it = j.find("scenario_mix"); it != j.end()) {
        require_object(*it, "scenario_mix");
        c.scenario_mix.fill(0.0);
        for (const auto& [name, w] : it->items()) {
            auto path = join_path("scenario_mix", name);
            Scenario s;
            try {
                s = parse_scenario(name);
            } catch (const ValidationError&) {
                bad_field(path, "unknown scenario");
            }
            c.scenario_mix[static_cast<std::size_t>(s)] = read_double(w, path);
        }
    }
}

}  // namespace timetrail
