#pragma once

// Threshold-based surrogate P/T peak detector. It looks for the largest
// deflection from the beat median inside a fixed search region around the
// QRS and accepts it when it clears a fraction of the beat's range.

#include <algorithm>
#include <cmath>
#include <vector>

#include "ebecg/pipeline.hpp"

namespace ebecg {

struct SurrogateDetectorParams {
    double p_from_s = -0.30;  // search regions, relative to the QRS time
    double p_to_s = -0.08;
    double t_from_s = 0.12;
    double t_to_s = 0.50;
    double threshold = 0.06;  // fraction of the beat's peak-to-peak range
};

inline std::vector<double> detect_wave(WaveKind kind, const ReconstructedBeat& beat, const SurrogateDetectorParams& p = {}) {
    const auto& x = beat.values;
    if (x.size() < 3) return {};
    std::vector<double> sorted(x);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double base = sorted[sorted.size() / 2];
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return {};

    const double q = beat.window.qrs_time;
    const double from = q + (kind == WaveKind::p ? p.p_from_s : p.t_from_s);
    const double to = q + (kind == WaveKind::p ? p.p_to_s : p.t_to_s);
    std::size_t best = x.size();
    double best_dev = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = beat.grid.time(i);
        if (t < from || t > to) continue;
        const double dev = std::abs(x[i] - base);
        if (dev > best_dev) {
            best_dev = dev;
            best = i;
        }
    }
    if (best == x.size() || best_dev < p.threshold * range) return {};
    return {beat.grid.time(best)};
}

inline WaveDetector surrogate_detector(SurrogateDetectorParams p = {}) {
    return [p](WaveKind kind, const ReconstructedBeat& beat) { return detect_wave(kind, beat, p); };
}

}  // namespace ebecg
