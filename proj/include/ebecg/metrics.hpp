#pragma once

// Reconstruction fidelity: PRD, DTW distance, wave-mark matching and
// per-method aggregation.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ebecg/types.hpp"
#include "ebecg/warping.hpp"

namespace ebecg {

/// Percentage root-mean-square difference.
inline double prd(std::span<const double> org, std::span<const double> rec) {
    if (org.size() != rec.size()) throw Error("prd: length mismatch");
    if (org.empty()) throw Error("prd: empty input");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < org.size(); ++i) {
        const double e = org[i] - rec[i];
        num += e * e;
        den += org[i] * org[i];
    }
    if (den == 0.0) throw Error("prd: original has zero energy");
    return 100.0 * std::sqrt(num / den);
}

/// Plain DTW distance between original and reconstruction.
inline double dtw_metric(std::span<const double> org, std::span<const double> rec) { return dtw_distance(org, rec); }

struct WaveMatch {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double sensitivity = 0.0;
    double ppv = 0.0;
    double f1 = 0.0;

    WaveMatch& operator+=(const WaveMatch& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        finalize();
        return *this;
    }

    /// Recompute the ratios from the counts. Both lists empty scores 1;
    /// otherwise 0/0 ratios are 0.
    void finalize() {
        if (tp + fp + fn == 0) {
            sensitivity = ppv = f1 = 1.0;
            return;
        }
        sensitivity = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        ppv = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        f1 = sensitivity + ppv > 0.0 ? 2.0 * sensitivity * ppv / (sensitivity + ppv) : 0.0;
    }
};

/// One-to-one matching of reference and reconstructed marks: candidate pairs
/// within `window` seconds are accepted greedily by increasing time gap.
inline WaveMatch match_waves(std::span<const double> ref, std::span<const double> rec, double window = 0.15) {
    struct Pair {
        double gap;
        std::size_t r;
        std::size_t c;
    };
    std::vector<Pair> pairs;
    for (std::size_t r = 0; r < ref.size(); ++r) {
        auto lo = std::lower_bound(rec.begin(), rec.end(), ref[r] - window - 1e-12);
        for (auto it = lo; it != rec.end() && *it <= ref[r] + window + 1e-12; ++it) {
            const double gap = std::abs(*it - ref[r]);
            if (gap <= window + 1e-12) pairs.push_back({gap, r, static_cast<std::size_t>(it - rec.begin())});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [&](const Pair& x, const Pair& y) {
        if (x.gap != y.gap) return x.gap < y.gap;
        const double tx = std::min(ref[x.r], rec[x.c]);
        const double ty = std::min(ref[y.r], rec[y.c]);
        if (tx != ty) return tx < ty;
        return std::tie(x.r, x.c) < std::tie(y.r, y.c);
    });
    std::vector<bool> used_r(ref.size(), false), used_c(rec.size(), false);
    WaveMatch m;
    for (const auto& p : pairs) {
        if (used_r[p.r] || used_c[p.c]) continue;
        used_r[p.r] = used_c[p.c] = true;
        ++m.tp;
    }
    m.fn = ref.size() - m.tp;
    m.fp = rec.size() - m.tp;
    m.finalize();
    return m;
}

struct BeatRow {
    std::size_t beat = 0;
    std::string method;
    int bits = 0;
    double prd = 0.0;
    double dtw = 0.0;
};

struct Distribution {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // population
    std::array<double, 5> percentiles{};  // 5, 25, 50, 75, 95
    std::size_t median_beat = 0;          // beat whose value is nearest the median
};

inline constexpr std::array<double, 5> kPercentiles{5.0, 25.0, 50.0, 75.0, 95.0};

/// Linear-interpolation percentile over sorted data (numpy default).
inline double percentile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error("percentile: empty data");
    const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

/// Beat whose value is closest to `target`; ties to the lowest beat id.
inline std::size_t nearest_beat(std::span<const double> values, std::span<const std::size_t> beats, double target) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double di = std::abs(values[i] - target);
        const double db = std::abs(values[best] - target);
        if (di < db || (di == db && beats[i] < beats[best])) best = i;
    }
    return beats[best];
}

inline Distribution describe(std::span<const double> values, std::span<const std::size_t> beats) {
    if (values.empty()) throw Error("describe: empty data");
    Distribution d;
    d.count = values.size();
    for (double v : values) d.mean += v;
    d.mean /= static_cast<double>(values.size());
    for (double v : values) d.std += (v - d.mean) * (v - d.mean);
    d.std = std::sqrt(d.std / static_cast<double>(values.size()));
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < kPercentiles.size(); ++k) d.percentiles[k] = percentile_sorted(sorted, kPercentiles[k]);
    d.median_beat = nearest_beat(values, beats, d.percentiles[2]);
    return d;
}

struct MethodAggregate {
    std::string method;
    int bits = 0;
    Distribution prd;
    Distribution dtw;
};

/// Pool per-beat rows by (method, bits). Groups are ordered by method name
/// then bits.
inline std::vector<MethodAggregate> aggregate(std::span<const BeatRow> rows) {
    if (rows.empty()) throw Error("aggregate: no rows");
    std::map<std::pair<std::string, int>, std::vector<const BeatRow*>> groups;
    for (const auto& r : rows) groups[{r.method, r.bits}].push_back(&r);
    std::vector<MethodAggregate> out;
    for (const auto& [key, members] : groups) {
        std::vector<double> p, d;
        std::vector<std::size_t> ids;
        for (const BeatRow* r : members) {
            p.push_back(r->prd);
            d.push_back(r->dtw);
            ids.push_back(r->beat);
        }
        out.push_back({key.first, key.second, describe(p, ids), describe(d, ids)});
    }
    return out;
}

}  // namespace ebecg
