#pragma once

// Heartbeat windowing of uniform signals and event streams from QRS times.

#include <algorithm>
#include <span>
#include <vector>

#include "ebecg/types.hpp"

namespace ebecg {

struct WindowRule {
    double before = 0.4;  // fraction of RR before the QRS
    double after = 0.6;   // fraction of RR after the QRS
};

/// One window per QRS: [qrs - 0.4 RR, qrs + 0.6 RR] with RR the preceding
/// interval (the first beat uses the following one). Where irregular RR makes
/// a window overlap the next, the earlier window is cut at the next start.
/// The last window is closed on the right.
inline std::vector<Window> beat_windows(std::span<const double> qrs, WindowRule rule = {}) {
    if (qrs.size() < 2) throw Error("beat_windows: need at least 2 QRS annotations");
    for (std::size_t k = 1; k < qrs.size(); ++k)
        if (!(qrs[k] > qrs[k - 1])) throw Error("beat_windows: QRS times must be strictly increasing");

    std::vector<Window> out(qrs.size());
    for (std::size_t k = 0; k < qrs.size(); ++k) {
        const double rr = k == 0 ? qrs[1] - qrs[0] : qrs[k] - qrs[k - 1];
        out[k].qrs_time = qrs[k];
        out[k].t_start = qrs[k] - rule.before * rr;
        out[k].t_end = qrs[k] + rule.after * rr;
    }
    for (std::size_t k = 0; k + 1 < out.size(); ++k) {
        if (out[k].t_end > out[k + 1].t_start) {
            out[k].t_end = out[k + 1].t_start;
            out[k].truncated = true;
        }
    }
    out.back().closed_end = true;
    return out;
}

/// Events inside `window`, bracketed by boundary events. A missing boundary
/// event is filled with a synthetic one at `baseline`.
inline EventBeat slice_events(std::span<const EventSample> stream, const Window& window, double baseline = 0.0) {
    EventBeat beat;
    beat.window = window;
    auto first = std::lower_bound(stream.begin(), stream.end(), window.t_start,
                                  [](const EventSample& e, double t) { return e.t < t; });
    for (auto it = first; it != stream.end() && window.contains(it->t); ++it) beat.events.push_back(*it);

    if (beat.events.empty() || beat.events.front().t != window.t_start)
        beat.events.insert(beat.events.begin(), EventSample{window.t_start, baseline, true});
    if (beat.events.back().t != window.t_end) beat.events.push_back(EventSample{window.t_end, baseline, true});
    return beat;
}

/// Record grid indices covered by `window`, clipped to the signal.
inline SampleGrid window_grid(const UniformSignal& signal, const Window& window, bool* clipped = nullptr) {
    signal.validate();
    const double fs = signal.fs;
    long long lo = detail::ceil_index((window.t_start - signal.t0) * fs);
    long long hi = window.closed_end ? detail::floor_index((window.t_end - signal.t0) * fs)
                                     : detail::ceil_index((window.t_end - signal.t0) * fs) - 1;
    const auto n = static_cast<long long>(signal.size());
    bool clip = false;
    if (lo < 0) {
        lo = 0;
        clip = true;
    }
    if (hi > n - 1) {
        hi = n - 1;
        clip = true;
    }
    if (hi < lo) throw Error("slice_uniform: window lies outside the signal");
    if (clipped) *clipped = clip;
    return SampleGrid{signal.t0, fs, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi - lo + 1)};
}

/// Contiguous samples covering `window`; flags the beat when clipped.
inline UniformBeat slice_uniform(const UniformSignal& signal, const Window& window) {
    UniformBeat beat;
    beat.window = window;
    beat.grid = window_grid(signal, window, &beat.clipped);
    const auto begin = signal.values.begin() + static_cast<std::ptrdiff_t>(beat.grid.first);
    beat.values.assign(begin, begin + static_cast<std::ptrdiff_t>(beat.grid.count));
    return beat;
}

}  // namespace ebecg
