#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ebecg/stats.hpp"

using namespace ebecg;

namespace {

// Reference values from scipy.stats.anderson_ksamp (midrank, two samples).
struct Frozen {
    const char* name;
    std::vector<double> a, b;
    double statistic, p;
};

std::vector<Frozen> frozen() {
    std::vector<Frozen> f;
    f.push_back({"interleaved", {1, 3, 5, 7, 9, 11, 13}, {2, 4, 6, 8, 10, 12}, -1.2584943552501724, 0.25});
    std::vector<double> a, b;
    for (int i = 0; i < 20; ++i) a.push_back(0.1 * i);
    for (int i = 0; i < 15; ++i) b.push_back(0.1 * i + 0.75);
    f.push_back({"shifted", a, b, 3.131554458540994, 0.01730733926869152});
    f.push_back({"ties", {1, 1, 2, 2, 3, 3, 4, 5}, {2, 3, 3, 3, 4, 4, 6, 6, 7}, 2.108501280697506, 0.044037549992676873});
    a.clear();
    b.clear();
    for (int i = 0; i < 30; ++i) a.push_back(std::sin(1.3 * i));
    for (int i = 0; i < 12; ++i) b.push_back(std::sin(0.7 * i) + 0.2);
    f.push_back({"sine", a, b, 0.8126975547518438, 0.1518086982791268});
    a.clear();
    b.clear();
    for (int i = 0; i < 10; ++i) {
        a.push_back(i);
        b.push_back(i + 100.0);
    }
    f.push_back({"disjoint", a, b, 9.85747217001257, 0.001});
    return f;
}

}  // namespace

TEST(AndersonDarling, MatchesReferenceImplementation) {
    for (const auto& f : frozen()) {
        const auto r = ad_two_sample(f.a, f.b);
        EXPECT_NEAR(r.statistic, f.statistic, 1e-9 * std::abs(f.statistic)) << f.name;
        EXPECT_NEAR(r.p_value, f.p, 1e-9 * f.p) << f.name;
    }
}

TEST(AndersonDarling, ClampFlags) {
    const auto f = frozen();
    EXPECT_TRUE(ad_two_sample(f[0].a, f[0].b).p_capped);
    EXPECT_TRUE(ad_two_sample(f[4].a, f[4].b).p_floored);
    const auto mid = ad_two_sample(f[1].a, f[1].b);
    EXPECT_FALSE(mid.p_capped || mid.p_floored);
}

TEST(AndersonDarling, IdenticalSamplesPass) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> a(50);
    for (auto& x : a) x = g(rng);
    const auto r = ad_two_sample(a, a);
    EXPECT_LT(r.statistic, 0.0);
    EXPECT_GT(r.p_value, 0.05);
}

TEST(AndersonDarling, SeparatedSamplesReject) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    std::vector<double> a(400), b(60);
    for (auto& x : a) x = g(rng);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = a[i] + 10.0;
    EXPECT_LT(ad_two_sample(a, b).p_value, 0.05);
}

TEST(AndersonDarling, PermutationInvariant) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<double> a(40), b(25);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng) + 0.3;
    const auto r0 = ad_two_sample(a, b);
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);
    const auto r1 = ad_two_sample(a, b);
    EXPECT_DOUBLE_EQ(r0.statistic, r1.statistic);
    EXPECT_DOUBLE_EQ(r0.p_value, r1.p_value);
}

TEST(AndersonDarling, RejectsDegenerateInput) {
    const std::vector<double> four{1, 2, 3, 4}, five{1, 2, 3, 4, 5}, same(6, 2.0);
    EXPECT_THROW(ad_two_sample(four, five), Error);
    EXPECT_THROW(ad_two_sample(same, same), Error);
}

TEST(FitQuadratic, RecoversExactParabola) {
    const std::array<double, 5> x{-1, 0, 1, 2, 3};
    std::array<double, 5> y{};
    for (std::size_t i = 0; i < 5; ++i) y[i] = 0.5 - 2.0 * x[i] + 0.25 * x[i] * x[i];
    const auto c = detail::fit_quadratic(x, y);
    EXPECT_NEAR(c[0], 0.5, 1e-12);
    EXPECT_NEAR(c[1], -2.0, 1e-12);
    EXPECT_NEAR(c[2], 0.25, 1e-12);
}
