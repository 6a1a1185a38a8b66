#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ebecg/metrics.hpp"

using namespace ebecg;

TEST(Prd, Examples) {
    const std::vector<double> a{1, 2, 3};
    EXPECT_EQ(prd(a, a), 0.0);
    EXPECT_DOUBLE_EQ(prd(std::vector<double>{1, 1}, std::vector<double>{0, 0}), 100.0);
    EXPECT_DOUBLE_EQ(prd(std::vector<double>{3, 4}, std::vector<double>{0, 0}), 100.0);
    EXPECT_DOUBLE_EQ(prd(std::vector<double>{3, 4}, std::vector<double>{3, 0}), 80.0);
}

TEST(Prd, Errors) {
    EXPECT_THROW(prd(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
    EXPECT_THROW(prd(std::vector<double>{0, 0}, std::vector<double>{1, 2}), Error);
}

TEST(WaveMatch, WithinWindow) {
    const auto m = match_waves(std::vector<double>{10.0}, std::vector<double>{10.1});
    EXPECT_EQ(m.tp, 1u);
    EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(WaveMatch, OutsideWindow) {
    const auto m = match_waves(std::vector<double>{10.0}, std::vector<double>{10.2});
    EXPECT_EQ(m.fn, 1u);
    EXPECT_EQ(m.fp, 1u);
    EXPECT_EQ(m.f1, 0.0);
}

TEST(WaveMatch, PartialDetection) {
    const auto m = match_waves(std::vector<double>{1.0, 2.0}, std::vector<double>{1.1});
    EXPECT_EQ(m.tp, 1u);
    EXPECT_EQ(m.fn, 1u);
    EXPECT_EQ(m.fp, 0u);
    EXPECT_DOUBLE_EQ(m.sensitivity, 0.5);
    EXPECT_DOUBLE_EQ(m.ppv, 1.0);
    EXPECT_DOUBLE_EQ(m.f1, 2.0 / 3.0);
}

TEST(WaveMatch, OneToOneNearestFirst) {
    const auto m = match_waves(std::vector<double>{1.0, 1.1}, std::vector<double>{1.09});
    EXPECT_EQ(m.tp, 1u);
    EXPECT_EQ(m.fn, 1u);
}

TEST(WaveMatch, Accumulates) {
    WaveMatch total;
    total += match_waves(std::vector<double>{1.0}, std::vector<double>{1.0});
    total += match_waves(std::vector<double>{}, std::vector<double>{}); 
    EXPECT_DOUBLE_EQ(total.f1, 1.0);
    total += match_waves(std::vector<double>{5.0}, std::vector<double>{});
    EXPECT_DOUBLE_EQ(total.sensitivity, 0.5);
}

TEST(Aggregate, SingleRow) {
    const std::vector<BeatRow> rows{{3, "linear", 4, 12.5, 0.75}};
    const auto agg = aggregate(rows);
    ASSERT_EQ(agg.size(), 1u);
    EXPECT_EQ(agg[0].prd.mean, 12.5);
    EXPECT_EQ(agg[0].prd.std, 0.0);
    for (double p : agg[0].prd.percentiles) EXPECT_EQ(p, 12.5);
    EXPECT_EQ(agg[0].dtw.median_beat, 3u);
}

TEST(Aggregate, ConstantRowsHaveZeroSpread) {
    std::vector<BeatRow> rows;
    for (std::size_t k = 0; k < 10; ++k) rows.push_back({k, "template", 3, 7.0, 1.0});
    EXPECT_EQ(aggregate(rows)[0].dtw.std, 0.0);
}

TEST(Aggregate, MatchesIndependentStatistics) {
    std::mt19937_64 rng(12);
    std::lognormal_distribution<double> ln(1.0, 0.5);
    std::vector<BeatRow> rows;
    std::vector<double> vals;
    for (std::size_t k = 0; k < 100; ++k) {
        rows.push_back({k, "sample_hold", 5, ln(rng), 0.0});
        vals.push_back(rows.back().prd);
    }
    const auto d = aggregate(rows)[0].prd;
    double sum = 0.0;
    for (double v : vals) sum += v;
    const double mean = sum / 100.0;
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    EXPECT_NEAR(d.mean, mean, 1e-12);
    EXPECT_NEAR(d.std, std::sqrt(ss / 100.0), 1e-12);
    std::sort(vals.begin(), vals.end());
    // numpy 'linear': rank q/100 * (n-1); for n = 100 the 25th percentile
    // sits 0.75 of the way between sorted[24] and sorted[25]
    EXPECT_NEAR(d.percentiles[1], vals[24] + 0.75 * (vals[25] - vals[24]), 1e-12);
    EXPECT_NEAR(d.percentiles[2], 0.5 * (vals[49] + vals[50]), 1e-12);
    EXPECT_NEAR(d.percentiles[0], vals[4] + 0.95 * (vals[5] - vals[4]), 1e-12);
    EXPECT_NEAR(d.percentiles[4], vals[94] + 0.05 * (vals[95] - vals[94]), 1e-12);
}

TEST(Aggregate, GroupsByMethodAndBits) {
    const std::vector<BeatRow> rows{{0, "linear", 4, 1, 1}, {0, "linear", 3, 2, 2}, {1, "linear", 4, 3, 3}, {0, "template", 4, 4, 4}};
    const auto agg = aggregate(rows);
    ASSERT_EQ(agg.size(), 3u);
    EXPECT_EQ(agg[0].bits, 3);
    EXPECT_EQ(agg[1].prd.count, 2u);
    EXPECT_EQ(agg[2].method, "template");
}
