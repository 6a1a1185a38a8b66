#pragma once

// Digital level-crossing ADC simulation over a uniformly sampled signal.

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "ebecg/types.hpp"

namespace ebecg {

/// 2^bits equally spaced levels spanning [v_min, v_max], both ends included.
struct LevelGrid {
    int bits = 4;
    double v_min = 0.0;
    double v_max = 1.0;

    void validate() const {
        if (bits < 1) throw Error("LevelGrid: bits must be >= 1");
        if (bits > 24) throw Error("LevelGrid: bits must be <= 24");
        if (!(v_max > v_min)) throw Error("LevelGrid: v_max must exceed v_min");
    }

    [[nodiscard]] std::size_t level_count() const { return std::size_t{1} << bits; }

    [[nodiscard]] double step() const {
        return (v_max - v_min) / static_cast<double>(level_count() - 1);
    }

    [[nodiscard]] double level(std::size_t l) const {
        if (l + 1 == level_count()) return v_max;
        return v_min + static_cast<double>(l) * step();
    }

    [[nodiscard]] std::vector<double> levels() const {
        std::vector<double> out(level_count());
        for (std::size_t l = 0; l < out.size(); ++l) out[l] = level(l);
        return out;
    }

    [[nodiscard]] double clamp(double v) const { return std::clamp(v, v_min, v_max); }
};

/// Grid over [min, max] of the first `calibration_s` seconds of `signal`
/// (the whole signal when calibration_s <= 0).
inline LevelGrid calibrated_grid(const UniformSignal& signal, int bits, double calibration_s) {
    signal.validate();
    std::size_t n = signal.size();
    if (calibration_s > 0.0) {
        auto want = static_cast<std::size_t>(std::max<long long>(1, detail::ceil_index(calibration_s * signal.fs)));
        n = std::min(n, want);
    }
    const auto [lo, hi] = std::minmax_element(signal.values.begin(), signal.values.begin() + static_cast<std::ptrdiff_t>(n));
    LevelGrid grid{bits, *lo, *hi};
    if (!(grid.v_max > grid.v_min)) {
        grid.v_min -= 0.5;
        grid.v_max += 0.5;
    }
    grid.validate();
    return grid;
}

/// Level-crossing events of `signal` against `grid`.
///
/// Crossings are detected per uniform interval and stamped with the time of
/// the sample that reaches or passes the level. Several levels crossed in one
/// interval share that timestamp and are emitted in traversal order. A sample
/// landing exactly on a level counts only when the last emitted level differs.
/// The stream always opens with the level nearest to the first sample.
inline EventStream lc_sample(const UniformSignal& signal, const LevelGrid& grid) {
    signal.validate();
    grid.validate();
    const std::vector<double> levels = grid.levels();
    const auto n_levels = static_cast<std::ptrdiff_t>(levels.size());

    auto index_of = [&](std::vector<double>::const_iterator it) { return it - levels.begin(); };

    EventStream events;
    events.reserve(signal.size());

    double prev = grid.clamp(signal.values.front());
    std::ptrdiff_t last;
    {
        auto it = std::lower_bound(levels.begin(), levels.end(), prev);
        std::ptrdiff_t hi = index_of(it);
        if (hi >= n_levels) hi = n_levels - 1;
        std::ptrdiff_t lo = hi > 0 ? hi - 1 : 0;
        last = (std::abs(levels[static_cast<std::size_t>(lo)] - prev) <= std::abs(levels[static_cast<std::size_t>(hi)] - prev)) ? lo : hi;
        events.push_back({signal.time(0), levels[static_cast<std::size_t>(last)], false});
    }

    for (std::size_t k = 1; k < signal.size(); ++k) {
        const double cur = grid.clamp(signal.values[k]);
        const double t = signal.time(k);
        auto emit = [&](std::ptrdiff_t l) {
            events.push_back({t, levels[static_cast<std::size_t>(l)], false});
            last = l;
        };
        if (cur > prev) {
            const std::ptrdiff_t first = index_of(std::upper_bound(levels.begin(), levels.end(), prev));
            const std::ptrdiff_t stop = index_of(std::lower_bound(levels.begin(), levels.end(), cur));
            for (std::ptrdiff_t l = first; l < stop; ++l) emit(l);
            if (stop < n_levels && levels[static_cast<std::size_t>(stop)] == cur && last != stop) emit(stop);
        } else if (cur < prev) {
            const std::ptrdiff_t hi = index_of(std::lower_bound(levels.begin(), levels.end(), prev)) - 1;
            const std::ptrdiff_t lo = index_of(std::upper_bound(levels.begin(), levels.end(), cur));
            for (std::ptrdiff_t l = hi; l >= lo; --l) emit(l);
            const std::ptrdiff_t hit = lo - 1;
            if (hit >= 0 && levels[static_cast<std::size_t>(hit)] == cur && last != hit) emit(hit);
        }
        prev = cur;
    }
    return events;
}

/// Sampling reduction factor: fraction of uniform samples discarded. Negative
/// when events outnumber samples.
inline double srf(std::size_t n_uniform, std::size_t n_events) {
    if (n_uniform == 0) throw Error("srf: n_uniform must be positive");
    return (static_cast<double>(n_uniform) - static_cast<double>(n_events)) / static_cast<double>(n_uniform);
}

/// Number of non-synthetic events in a stream.
inline std::size_t real_event_count(std::span<const EventSample> events) {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const EventSample& e) { return !e.synthetic; }));
}

}  // namespace ebecg
