#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "timetrail/domain.hpp"
#include "timetrail/error.hpp"

using namespace timetrail;
using oracle::tx;

namespace {

constexpr const char* kHeader = "tx_id,timestamp,user_id,terminal_id,amount,tx_type,label\n";

std::string expect_validation_error(const std::string& csv) {
    try {
        parse_transactions(csv);
    } catch (const ValidationError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ValidationError for:\n" << csv;
    return {};
}

}  // namespace

TEST(ParseTransactions, SortsRowsByTime) {
    auto d = parse_transactions(std::string(kHeader) +
                                "c,300,u1,t1,1.00,purchase,0\n"
                                "a,100,u1,t1,2.00,withdrawal,1\n"
                                "b,1970-01-01T00:03:20Z,u2,t2,3.50,deposit,0\n");
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d[0].tx_id, "a");
    EXPECT_EQ(d[1].tx_id, "b");
    EXPECT_EQ(d[1].timestamp, 200);
    EXPECT_EQ(d[2].tx_id, "c");
    EXPECT_EQ(d[1].tx_type, TxType::deposit);
    EXPECT_TRUE(d[0].is_fraud());
}

TEST(ParseTransactions, HeaderOnlyGivesEmptyDataset) {
    auto d = parse_transactions(kHeader);
    EXPECT_EQ(d.size(), 0u);
    EXPECT_EQ(d.meta().row_count, 0u);
    EXPECT_EQ(d.meta().fraud_count, 0u);
}

TEST(ParseTransactions, NegativeAmountNamesLineAndField) {
    auto msg = expect_validation_error(std::string(kHeader) + "a,1,u,t,1.00,purchase,0\nb,2,u,t,-5.00,purchase,0\n");
    EXPECT_NE(msg.find("3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("amount"), std::string::npos) << msg;
}

TEST(ParseTransactions, UnknownTypeAndMalformedTimestampAreErrors) {
    auto msg = expect_validation_error(std::string(kHeader) + "a,1,u,t,1.00,refund,0\n");
    EXPECT_NE(msg.find("tx_type"), std::string::npos) << msg;
    msg = expect_validation_error(std::string(kHeader) + "a,yesterday,u,t,1.00,purchase,0\n");
    EXPECT_NE(msg.find("timestamp"), std::string::npos) << msg;
}

TEST(ParseTransactions, EmptyAmountIsMissingNotZero) {
    auto d = parse_transactions(std::string(kHeader) + "a,1,u,t,,purchase,0\n");
    ASSERT_EQ(d.size(), 1u);
    EXPECT_TRUE(std::isnan(d[0].amount));
    EXPECT_TRUE(d[0].has_missing_fields());
}

TEST(ParseTransactions, LabelColumnOptional) {
    auto d = parse_transactions("tx_id,timestamp,user_id,terminal_id,amount,tx_type\na,1,u,t,1,purchase\n");
    EXPECT_FALSE(d[0].label.has_value());
    EXPECT_FALSE(d.meta().fraud_rate.has_value());
}

TEST(Timestamps, IsoAndEpochAgree) {
    EXPECT_EQ(parse_timestamp("2023-01-02T03:00:00Z"), 1672628400);
    EXPECT_EQ(parse_timestamp("1672628400"), 1672628400);
    EXPECT_EQ(format_iso8601(1672628400), "2023-01-02T03:00:00Z");
    EXPECT_THROW(parse_timestamp("2023-13-01T00:00:00Z"), ValidationError);
}

TEST(Serialize, RoundTripReproducesDataset) {
    std::mt19937_64 rng(7);
    auto d = oracle::random_dataset(rng, 300, 86400 * 10);
    auto again = parse_transactions(serialize_transactions(d));
    EXPECT_EQ(again, d);
    EXPECT_EQ(serialize_transactions(again), serialize_transactions(d));
}

TEST(Serialize, ScenarioColumnRoundTrips) {
    auto a = tx("a", 1);
    a.label = Label::fraud;
    a.scenario = "burst";
    Dataset d({a, tx("b", 2)});
    auto text = serialize_transactions(d);
    EXPECT_NE(text.find("scenario"), std::string::npos);
    EXPECT_EQ(parse_transactions(text), d);
}

TEST(Cleanse, DuplicateTxIdKeepsFirst) {
    Dataset d({tx("a", 1, "u1", "t1", 5.0), tx("a", 2, "u1", "t1", 6.0), tx("b", 3)});
    auto r = cleanse(d, {DedupKey::tx_id, false, 3.0});
    EXPECT_EQ(r.report.duplicates_removed, 1u);
    ASSERT_EQ(r.data.size(), 2u);
    EXPECT_EQ(r.data[0].amount, 5.0);
}

TEST(Cleanse, CompositeKeyCatchesIdlessDuplicates) {
    Dataset d({tx("a", 1, "u1", "t1", 5.0), tx("b", 1, "u1", "t1", 5.0), tx("c", 1, "u1", "t1", 6.0)});
    auto r = cleanse(d, {DedupKey::composite, false, 3.0});
    EXPECT_EQ(r.report.duplicates_removed, 1u);
    EXPECT_EQ(r.data.size(), 2u);
}

TEST(Cleanse, IqrFenceRemovesExtremeAmount) {
    // Sorted {10,10,11,11,12,1e6}: Q1 = 10.25, Q3 = 11.75, IQR 1.5, upper fence 16.25.
    std::vector<double> amounts{10, 11, 12, 10, 11, 1'000'000};
    std::vector<Transaction> rows;
    for (std::size_t i = 0; i < amounts.size(); ++i)
        rows.push_back(tx(fmt::format("t{}", i), static_cast<Timestamp>(i), "u", "t", amounts[i]));
    auto r = cleanse(Dataset(rows), {DedupKey::tx_id, true, 3.0});
    EXPECT_EQ(r.report.outliers_removed, 1u);
    EXPECT_EQ(r.data.size(), 5u);
    for (const auto& t : r.data.rows()) EXPECT_LT(t.amount, 100.0);
}

TEST(Cleanse, TypeSevenQuartiles) {
    std::vector<double> s{10, 10, 11, 11, 12, 1'000'000};
    EXPECT_DOUBLE_EQ(sorted_quantile(s, 0.25), 10.25);
    EXPECT_DOUBLE_EQ(sorted_quantile(s, 0.75), 11.75);
    EXPECT_DOUBLE_EQ(sorted_quantile(s, 0.0), 10.0);
    EXPECT_DOUBLE_EQ(sorted_quantile(s, 1.0), 1'000'000.0);
}

TEST(Cleanse, CleanDataIsUntouched) {
    std::mt19937_64 rng(3);
    auto d = oracle::random_dataset(rng, 200, 86400);
    auto r = cleanse(d, {DedupKey::tx_id, true, 3.0});
    EXPECT_EQ(r.data, d);
    EXPECT_EQ(r.report.duplicates_removed + r.report.missing_dropped + r.report.outliers_removed, 0u);
}

TEST(Cleanse, ReportCountsConserveInput) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto base = oracle::random_dataset(rng, 150, 86400);
        std::vector<Transaction> rows(base.rows().begin(), base.rows().end());
        std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
        for (int k = 0; k < 10; ++k) rows.push_back(rows[pick(rng)]);
        rows[pick(rng)].amount = kMissingAmount;
        rows[pick(rng)].user_id.clear();
        rows[pick(rng)].amount = 1e9;
        Dataset d(rows);
        auto r = cleanse(d, {DedupKey::tx_id, true, 3.0});
        const auto& c = r.report;
        EXPECT_EQ(c.duplicates_removed + c.missing_dropped + c.outliers_removed + c.retained, d.size());
        EXPECT_EQ(c.retained, r.data.size());
        EXPECT_GE(c.duplicates_removed, 1u);
        EXPECT_GE(c.missing_dropped, 1u);
    }
}

TEST(Segment, BoundariesAreHalfOpen) {
    Dataset d({tx("a", 0), tx("b", 50), tx("c", 100), tx("d", 150)});
    auto w = temporal_segment(d, 100);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w[0].start, 0);
    EXPECT_EQ(w[0].end, 100);
    EXPECT_EQ(w[0].rows.size(), 2u);
    EXPECT_EQ(w[1].rows.size(), 2u);
    EXPECT_EQ(w[1].rows[0].tx_id, "c");
}

TEST(Segment, GapsProduceEmptyWindows) {
    auto w = temporal_segment(Dataset({tx("a", 0), tx("b", 250)}), 100);
    ASSERT_EQ(w.size(), 3u);
    EXPECT_TRUE(w[1].rows.empty());
}

TEST(Segment, SingleRowAndEmptyDataset) {
    EXPECT_EQ(temporal_segment(Dataset({tx("a", 42)}), 100).size(), 1u);
    EXPECT_TRUE(temporal_segment(Dataset(), 100).empty());
}

TEST(Segment, WindowsPartitionTheDataset) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        auto d = oracle::random_dataset(rng, 400, 86400 * 7);
        auto ws = temporal_segment(d, 3600 * (trial + 1));
        std::size_t total = 0;
        std::set<std::string> seen;
        for (std::size_t k = 0; k < ws.size(); ++k) {
            if (k > 0) EXPECT_EQ(ws[k].start, ws[k - 1].end);
            for (const auto& r : ws[k].rows) {
                EXPECT_GE(r.timestamp, ws[k].start);
                EXPECT_LT(r.timestamp, ws[k].end);
                seen.insert(r.tx_id);
            }
            total += ws[k].rows.size();
        }
        EXPECT_EQ(total, d.size());
        EXPECT_EQ(seen.size(), d.size());
    }
}

TEST(Split, DistinctTimesCutAtRowQuantiles) {
    std::vector<Transaction> rows;
    for (int i = 1; i <= 10; ++i) rows.push_back(tx(fmt::format("r{:02d}", i), i));
    auto s = temporal_split(Dataset(rows), 0.6, 0.2);
    ASSERT_EQ(s.train.size(), 6u);
    ASSERT_EQ(s.val.size(), 2u);
    ASSERT_EQ(s.test.size(), 2u);
    EXPECT_EQ(s.train[5].timestamp, 6);
    EXPECT_EQ(s.val[0].timestamp, 7);
    EXPECT_EQ(s.test[0].timestamp, 9);
}

TEST(Split, SingleTimestampLeavesLaterPartsEmptyAndThrows) {
    std::vector<Transaction> rows;
    for (int i = 0; i < 10; ++i) rows.push_back(tx(fmt::format("r{}", i), 5));
    EXPECT_THROW(temporal_split(Dataset(rows), 0.6, 0.2), ValidationError);
}

TEST(Split, TiesAtCutGoToEarlierPart) {
    std::vector<Transaction> rows;
    for (int i = 0; i < 10; ++i) rows.push_back(tx(fmt::format("r{}", i), i < 7 ? 1 : 2 + i));
    auto s = temporal_split(Dataset(rows), 0.6, 0.2);
    EXPECT_EQ(s.train.size(), 7u);
}

TEST(Split, ConservesRowsAndOrdersParts) {
    std::mt19937_64 rng(9);
    auto d = oracle::random_dataset(rng, 1000, 86400 * 30);
    auto s = temporal_split(d, 0.6, 0.2);
    EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), 1000u);
    EXPECT_LT(s.train.meta().t_max, s.val.meta().t_min);
    EXPECT_LT(s.val.meta().t_max, s.test.meta().t_min);
}
