#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "ebecg/types.hpp"

namespace ebecg {

struct TimedPoint {
    double t = 0.0;
    double v = 0.0;

    friend bool operator==(const TimedPoint&, const TimedPoint&) = default;
};

/// Evaluate the polyline through `pts` (non-decreasing t) at time `t`.
/// Vertical runs resolve to their last value; outside the support the
/// nearest end value is held.
inline double polyline_at(std::span<const TimedPoint> pts, double t) {
    if (pts.empty()) throw Error("polyline_at: empty polyline");
    auto it = std::upper_bound(pts.begin(), pts.end(), t, [](double x, const TimedPoint& p) { return x < p.t; });
    if (it == pts.begin()) return pts.front().v;
    if (it == pts.end()) return pts.back().v;
    const TimedPoint& a = *(it - 1);
    const TimedPoint& b = *it;
    if (t == a.t) return a.v;
    const double w = (t - a.t) / (b.t - a.t);
    return a.v + w * (b.v - a.v);
}

/// Sample the polyline on every point of `grid`.
inline std::vector<double> resample_linear(std::span<const TimedPoint> pts, const SampleGrid& grid) {
    std::vector<double> out(grid.count);
    for (std::size_t i = 0; i < grid.count; ++i) out[i] = polyline_at(pts, grid.time(i));
    return out;
}

}  // namespace ebecg
