#pragma once

// Template warping through recorded events: each pair of consecutive events
// is bound to a template segment via the matching path, the segment is
// sheared so its ends land on the events, and the pieces are stitched and
// resampled onto the record grid.

#include <span>
#include <vector>

#include "ebecg/interp.hpp"
#include "ebecg/template.hpp"
#include "ebecg/types.hpp"
#include "ebecg/warping.hpp"

namespace ebecg {

struct SegmentPair {
    EventSample start;
    EventSample end;
    std::vector<TimedPoint> tpl;  // template points, first .. last inclusive
    std::size_t tpl_first = 0;
    std::size_t tpl_last = 0;
};

struct WarpedSegment {
    std::vector<double> time;   // relative to the segment start event
    std::vector<double> value;  // relative to the segment start event
};

struct Reconstruction {
    ReconstructedBeat beat;
    std::vector<TimedPoint> curve;  // stitched polyline before resampling
    std::int64_t template_id = 0;
    double distance = 0.0;
};

/// Upper median of the template indices each matched point was paired with.
/// Returns one index per series point; the path must cover 0..n_points-1.
inline std::vector<std::size_t> matched_midpoints(const WarpResult& path, std::size_t n_points, std::size_t n_template) {
    if (path.path.empty() || path.path.front() != IndexPair{0, 0} ||
        path.path.back() != IndexPair{n_points - 1, n_template - 1})
        throw Error("segment_assign: path does not span the beat and template");
    std::vector<std::size_t> lo(n_points, 0), hi(n_points, 0);
    std::vector<bool> seen(n_points, false);
    for (const auto& [i, j] : path.path) {
        if (i >= n_points || j >= n_template) throw Error("segment_assign: path index out of range");
        if (!seen[i]) {
            lo[i] = j;
            hi[i] = j;
            seen[i] = true;
        } else {
            lo[i] = std::min(lo[i], j);
            hi[i] = std::max(hi[i], j);
        }
    }
    std::vector<std::size_t> mid(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        if (!seen[i]) throw Error("segment_assign: path skips a beat point");
        mid[i] = lo[i] + (hi[i] - lo[i] + 1) / 2;
    }
    return mid;
}

/// Template segment for every pair of consecutive events. Template times are
/// the template's unit time base stretched over the beat window.
inline std::vector<SegmentPair> segment_assign(const WarpResult& path, const EventBeat& eb, std::span<const double> tpl) {
    if (eb.events.size() < 2) throw Error("segment_assign: beat needs at least 2 events");
    if (tpl.size() < 2) throw Error("segment_assign: template needs at least 2 samples");
    const EventPoints pts = event_points(eb);
    const auto mid = matched_midpoints(path, pts.series.size(), tpl.size());

    const double t0 = eb.window.t_start;
    const double span = eb.window.t_end - eb.window.t_start;
    const double last = static_cast<double>(tpl.size() - 1);
    auto tpl_point = [&](std::size_t j) { return TimedPoint{t0 + span * static_cast<double>(j) / last, tpl[j]}; };

    std::vector<SegmentPair> out;
    out.reserve(eb.events.size() - 1);
    for (std::size_t k = 0; k + 1 < eb.events.size(); ++k) {
        SegmentPair seg;
        seg.start = eb.events[k];
        seg.end = eb.events[k + 1];
        seg.tpl_first = mid[pts.point_of_event[k]];
        seg.tpl_last = mid[pts.point_of_event[k + 1]];
        for (std::size_t j = seg.tpl_first; j <= seg.tpl_last; ++j) seg.tpl.push_back(tpl_point(j));
        out.push_back(std::move(seg));
    }
    return out;
}

/// Translate both the event pair and the template piece to start at (0, 0).
inline SegmentPair shift_segment(const SegmentPair& pair) {
    SegmentPair s = pair;
    s.end.t -= pair.start.t;
    s.end.v -= pair.start.v;
    s.start.t = 0.0;
    s.start.v = 0.0;
    if (!s.tpl.empty()) {
        const TimedPoint o = pair.tpl.front();
        for (auto& p : s.tpl) {
            p.t -= o.t;
            p.v -= o.v;
        }
        s.tpl.front() = {0.0, 0.0};
    }
    return s;
}

/// Stretch a shifted template piece in time to the event gap and shear it in
/// value so it ends on the second event. Zero-length pieces on either side
/// degrade to the two event end points.
inline WarpedSegment warp_segment(const SegmentPair& shifted) {
    const double et = shifted.end.t;
    const double ev = shifted.end.v;
    const std::size_t n = shifted.tpl.size();
    WarpedSegment w;
    if (n < 2 || !(shifted.tpl.back().t > 0.0) || !(et > 0.0)) {
        w.time = {0.0, et};
        w.value = {0.0, ev};
        return w;
    }
    const double tl = shifted.tpl.back().t;
    const double vl = shifted.tpl.back().v;
    const double scale = et / tl;
    const double slope = (ev - vl) / et;
    w.time.resize(n);
    w.value.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        w.time[j] = shifted.tpl[j].t * scale;
        w.value[j] = shifted.tpl[j].v + w.time[j] * slope;
    }
    w.time.front() = 0.0;
    w.value.front() = 0.0;
    w.time.back() = et;
    w.value.back() = ev;
    return w;
}

/// Stitch warped pieces back onto absolute time/value. Segment ends are the
/// events themselves, so every event lies exactly on the polyline.
inline std::vector<TimedPoint> stitch(std::span<const WarpedSegment> segments, const EventBeat& eb) {
    if (segments.size() + 1 != eb.events.size()) throw Error("recompose: segment count does not match the beat");
    std::vector<TimedPoint> curve;
    curve.push_back({eb.events.front().t, eb.events.front().v});
    for (std::size_t k = 0; k < segments.size(); ++k) {
        const EventSample& a = eb.events[k];
        const EventSample& b = eb.events[k + 1];
        const auto& s = segments[k];
        for (std::size_t j = 1; j + 1 < s.time.size(); ++j) curve.push_back({a.t + s.time[j], a.v + s.value[j]});
        curve.push_back({b.t, b.v});
    }
    return curve;
}

/// Stitch and resample linearly onto `grid`.
inline ReconstructedBeat recompose(std::span<const WarpedSegment> segments, const EventBeat& eb, const SampleGrid& grid) {
    const auto curve = stitch(segments, eb);
    return ReconstructedBeat{resample_linear(curve, grid), grid, eb.window};
}

/// Full warp of one template through an event beat along a given path.
inline Reconstruction reconstruct_with(const EventBeat& eb, const Template& tpl, const WarpResult& path, const SampleGrid& grid) {
    const auto pairs = segment_assign(path, eb, tpl.values);
    std::vector<WarpedSegment> warped;
    warped.reserve(pairs.size());
    for (const auto& p : pairs) warped.push_back(warp_segment(shift_segment(p)));
    Reconstruction r;
    r.curve = stitch(warped, eb);
    r.beat = ReconstructedBeat{resample_linear(r.curve, grid), grid, eb.window};
    r.template_id = tpl.id;
    r.distance = path.distance;
    return r;
}

/// Pick the best template for the beat and warp it through the events.
inline Reconstruction reconstruct(const EventBeat& eb, std::span<const Template> templates, const SampleGrid& grid,
                                  const IIDDTWParams& params = {}) {
    const TemplateRanking rank = rank_templates(eb, templates, params);
    return reconstruct_with(eb, templates[rank.index], rank.warp, grid);
}

}  // namespace ebecg
