#pragma once

// Two-sample Anderson-Darling test (Scholz & Stephens k-sample form with
// k = 2), midrank version for tied observations.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "ebecg/types.hpp"

namespace ebecg {

struct ADResult {
    double statistic = 0.0;  // standardized T statistic
    double a2 = 0.0;         // raw A2akN
    double p_value = 0.0;    // in [0.001, 0.25]
    bool p_capped = false;   // true p is above 0.25
    bool p_floored = false;  // true p is below 0.001
};

namespace detail {

// Least-squares quadratic through (x, y); returns {c0, c1, c2}.
template <std::size_t N>
std::array<double, 3> fit_quadratic(const std::array<double, N>& x, const std::array<double, N>& y) {
    double s[5] = {0, 0, 0, 0, 0};
    double r[3] = {0, 0, 0};
    for (std::size_t i = 0; i < N; ++i) {
        double p = 1.0;
        for (int k = 0; k < 5; ++k) {
            s[k] += p;
            if (k < 3) r[k] += p * y[i];
            p *= x[i];
        }
    }
    double a[3][4] = {{s[0], s[1], s[2], r[0]}, {s[1], s[2], s[3], r[1]}, {s[2], s[3], s[4], r[2]}};
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int q = c + 1; q < 3; ++q)
            if (std::abs(a[q][c]) > std::abs(a[piv][c])) piv = q;
        for (int k = 0; k < 4; ++k) std::swap(a[c][k], a[piv][k]);
        for (int q = 0; q < 3; ++q) {
            if (q == c) continue;
            const double f = a[q][c] / a[c][c];
            for (int k = c; k < 4; ++k) a[q][k] -= f * a[c][k];
        }
    }
    return {a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]};
}

}  // namespace detail

/// Two-sample Anderson-Darling test. The p-value comes from the
/// Scholz-Stephens critical-value interpolation and is clamped to the range
/// the interpolation covers.
inline ADResult ad_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 5 || b.size() < 5) throw Error("ad_two_sample: each sample needs at least 5 observations");

    std::vector<double> z;
    z.reserve(a.size() + b.size());
    z.insert(z.end(), a.begin(), a.end());
    z.insert(z.end(), b.begin(), b.end());
    std::sort(z.begin(), z.end());
    std::vector<double> zu = z;
    zu.erase(std::unique(zu.begin(), zu.end()), zu.end());
    if (zu.size() < 2) throw Error("ad_two_sample: needs more than one distinct observation");

    const double n_total = static_cast<double>(z.size());
    std::array<std::vector<double>, 2> sorted{std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end())};
    for (auto& s : sorted) std::sort(s.begin(), s.end());

    double a2 = 0.0;
    for (const auto& s : sorted) {
        const double ni = static_cast<double>(s.size());
        double sum = 0.0;
        for (double zj : zu) {
            const auto z_lo = std::lower_bound(z.begin(), z.end(), zj) - z.begin();
            const auto z_hi = std::upper_bound(z.begin(), z.end(), zj) - z.begin();
            const double lj = static_cast<double>(z_hi - z_lo);
            const double bj = static_cast<double>(z_lo) + lj / 2.0;
            const auto s_lo = std::lower_bound(s.begin(), s.end(), zj) - s.begin();
            const auto s_hi = std::upper_bound(s.begin(), s.end(), zj) - s.begin();
            const double mij = static_cast<double>(s_hi) - static_cast<double>(s_hi - s_lo) / 2.0;
            const double num = n_total * mij - bj * ni;
            sum += lj / n_total * num * num / (bj * (n_total - bj) - n_total * lj / 4.0);
        }
        a2 += sum / ni;
    }
    a2 *= (n_total - 1.0) / n_total;

    constexpr double k = 2.0;
    const double big_h = 1.0 / static_cast<double>(a.size()) + 1.0 / static_cast<double>(b.size());
    double h = 0.0;
    double g = 0.0;
    {
        // hs_cs[q] = sum_{i=N-1-q}^{N-1} 1/i for q = 0 .. N-3
        const auto n = static_cast<std::size_t>(n_total);
        double cs = 0.0;
        for (std::size_t q = 0; q + 2 < n; ++q) {
            cs += 1.0 / static_cast<double>(n - 1 - q);
            g += cs / static_cast<double>(q + 2);
        }
        h = cs + 1.0;
    }
    const double ca = (4 * g - 6) * (k - 1) + (10 - 6 * g) * big_h;
    const double cb = (2 * g - 4) * k * k + 8 * h * k + (2 * g - 14 * h - 4) * big_h - 8 * h + 4 * g - 6;
    const double cc = (6 * h + 2 * g - 2) * k * k + (4 * h - 4 * g + 6) * k + (2 * h - 6) * big_h + 4 * h;
    const double cd = (2 * h + 6) * k * k - 4 * h * k;
    const double nn = n_total;
    const double sigmasq = (ca * nn * nn * nn + cb * nn * nn + cc * nn + cd) / ((nn - 1.0) * (nn - 2.0) * (nn - 3.0));
    const double m = k - 1.0;

    ADResult res;
    res.a2 = a2;
    res.statistic = (a2 - m) / std::sqrt(sigmasq);

    static constexpr std::array<double, 7> b0{0.675, 1.281, 1.645, 1.96, 2.326, 2.573, 3.085};
    static constexpr std::array<double, 7> b1{-0.245, 0.25, 0.678, 1.149, 1.822, 2.364, 3.615};
    static constexpr std::array<double, 7> b2{-0.105, -0.305, -0.362, -0.391, -0.396, -0.345, -0.154};
    static constexpr std::array<double, 7> sig{0.25, 0.1, 0.05, 0.025, 0.01, 0.005, 0.001};
    std::array<double, 7> critical{};
    std::array<double, 7> log_sig{};
    for (std::size_t i = 0; i < 7; ++i) {
        critical[i] = b0[i] + b1[i] / std::sqrt(m) + b2[i] / m;
        log_sig[i] = std::log(sig[i]);
    }
    const double t = res.statistic;
    if (t < critical.front()) {
        res.p_value = sig.front();
        res.p_capped = true;
    } else if (t > critical.back()) {
        res.p_value = sig.back();
        res.p_floored = true;
    } else {
        const auto c = detail::fit_quadratic(critical, log_sig);
        res.p_value = std::clamp(std::exp(c[0] + c[1] * t + c[2] * t * t), sig.back(), sig.front());
    }
    return res;
}

}  // namespace ebecg
