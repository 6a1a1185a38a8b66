#pragma once

// Standard resampling of event beats onto the record grid: sample-and-hold,
// linear interpolation and a forward-built quadratic spline.

#include <algorithm>
#include <vector>

#include "ebecg/interp.hpp"
#include "ebecg/types.hpp"

namespace ebecg {

struct BaselineOutput {
    ReconstructedBeat beat;
    bool fallback = false;  // fewer events than the method needs
};

namespace detail {

// Events with a shared time stamp reduced to the last value.
inline std::vector<TimedPoint> distinct_points(const EventBeat& eb) {
    std::vector<TimedPoint> pts;
    pts.reserve(eb.events.size());
    for (const auto& e : eb.events) {
        if (!pts.empty() && e.t == pts.back().t)
            pts.back().v = e.v;
        else
            pts.push_back({e.t, e.v});
    }
    return pts;
}

}  // namespace detail

/// Each grid point takes the most recent event value; a grid point on an
/// event takes that event's value.
inline BaselineOutput sample_hold(const EventBeat& eb, const SampleGrid& grid) {
    if (eb.events.empty()) throw Error("sample_hold: beat has no events");
    BaselineOutput out;
    out.beat = ReconstructedBeat{std::vector<double>(grid.count), grid, eb.window};
    const auto& ev = eb.events;
    for (std::size_t i = 0; i < grid.count; ++i) {
        const double t = grid.time(i);
        auto it = std::upper_bound(ev.begin(), ev.end(), t, [](double x, const EventSample& e) { return x < e.t; });
        out.beat.values[i] = it == ev.begin() ? ev.front().v : (it - 1)->v;
    }
    return out;
}

inline BaselineOutput linear_interp(const EventBeat& eb, const SampleGrid& grid) {
    const auto pts = detail::distinct_points(eb);
    if (pts.size() < 2) {
        auto out = sample_hold(eb, grid);
        out.fallback = true;
        return out;
    }
    std::vector<TimedPoint> poly;
    poly.reserve(eb.events.size());
    for (const auto& e : eb.events) poly.push_back({e.t, e.v});
    return BaselineOutput{ReconstructedBeat{resample_linear(poly, grid), grid, eb.window}, false};
}

/// C1 piecewise quadratic through the events, built left to right. The
/// starting slope is that of the parabola through the first three events,
/// every later slope follows from continuity.
inline BaselineOutput quad_spline(const EventBeat& eb, const SampleGrid& grid) {
    const auto pts = detail::distinct_points(eb);
    if (pts.size() < 3) {
        auto out = linear_interp(eb, grid);
        out.fallback = true;
        return out;
    }
    const std::size_t n = pts.size();
    std::vector<double> slope(n), curv(n - 1);
    {
        const double h0 = pts[1].t - pts[0].t;
        const double h1 = pts[2].t - pts[1].t;
        const double m01 = (pts[1].v - pts[0].v) / h0;
        const double m12 = (pts[2].v - pts[1].v) / h1;
        slope[0] = m01 - h0 * (m12 - m01) / (h0 + h1);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = pts[i + 1].t - pts[i].t;
        const double m = (pts[i + 1].v - pts[i].v) / h;
        curv[i] = (m - slope[i]) / h;
        slope[i + 1] = 2.0 * m - slope[i];
    }

    BaselineOutput out;
    out.beat = ReconstructedBeat{std::vector<double>(grid.count), grid, eb.window};
    for (std::size_t g = 0; g < grid.count; ++g) {
        const double t = grid.time(g);
        if (t <= pts.front().t) {
            out.beat.values[g] = pts.front().v;
            continue;
        }
        if (t >= pts.back().t) {
            out.beat.values[g] = pts.back().v;
            continue;
        }
        auto it = std::upper_bound(pts.begin(), pts.end(), t, [](double x, const TimedPoint& p) { return x < p.t; });
        const auto i = static_cast<std::size_t>(it - pts.begin()) - 1;
        const double dx = t - pts[i].t;
        out.beat.values[g] = pts[i].v + slope[i] * dx + curv[i] * dx * dx;
    }
    return out;
}

}  // namespace ebecg
