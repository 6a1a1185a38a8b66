#pragma once

// DTW, derivative DTW and the time-injected derivative DTW used to match
// event beats against uniformly sampled templates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ebecg/template.hpp"
#include "ebecg/types.hpp"

namespace ebecg {

using IndexPair = std::pair<std::size_t, std::size_t>;

struct WarpResult {
    double distance = 0.0;
    std::vector<IndexPair> path;  // (0,0) .. (N-1, M-1)
};

/// Values with their time stamps. Matching expects t normalized to unit span.
struct Series {
    std::vector<double> v;
    std::vector<double> t;

    [[nodiscard]] std::size_t size() const { return v.size(); }
};

struct IIDDTWParams {
    double lambda = 1.0;
    // Sakoe-Chiba half width in cells around the scaled diagonal; unset means
    // the full matrix.
    std::optional<std::size_t> band;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool in_band(std::size_t i, std::size_t j, std::size_t n, std::size_t m, std::optional<std::size_t> band) {
    if (!band) return true;
    const double diag = n > 1 ? static_cast<double>(i) * static_cast<double>(m - 1) / static_cast<double>(n - 1) : 0.0;
    return std::abs(diag - static_cast<double>(j)) <= static_cast<double>(*band) + 1e-9;
}

/// Accumulated cost matrix (row-major, n x m) of the three-way recurrence.
template <class Cost>
std::vector<double> accumulate(std::size_t n, std::size_t m, Cost&& cost, std::optional<std::size_t> band) {
    std::vector<double> d(n * m, kInf);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (!in_band(i, j, n, m, band)) continue;
            double best;
            if (i == 0 && j == 0) {
                best = 0.0;
            } else {
                best = kInf;
                if (i > 0 && j > 0) best = std::min(best, d[(i - 1) * m + (j - 1)]);
                if (i > 0) best = std::min(best, d[(i - 1) * m + j]);
                if (j > 0) best = std::min(best, d[i * m + (j - 1)]);
            }
            d[i * m + j] = cost(i, j) + best;
        }
    }
    return d;
}

/// Backtrack from (n-1, m-1). Ties prefer the diagonal, then (i-1, j), then
/// (i, j-1).
inline std::vector<IndexPair> backtrack(const std::vector<double>& d, std::size_t n, std::size_t m) {
    std::vector<IndexPair> path;
    std::size_t i = n - 1;
    std::size_t j = m - 1;
    path.emplace_back(i, j);
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else {
            const double diag = d[(i - 1) * m + (j - 1)];
            const double up = d[(i - 1) * m + j];
            const double left = d[i * m + (j - 1)];
            if (diag <= up && diag <= left) {
                --i;
                --j;
            } else if (up <= left) {
                --i;
            } else {
                --j;
            }
        }
        path.emplace_back(i, j);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

template <class Cost>
WarpResult warp(std::size_t n, std::size_t m, Cost&& cost, std::optional<std::size_t> band) {
    const auto d = accumulate(n, m, cost, band);
    const double dist = d.back();
    if (!std::isfinite(dist)) throw Error("warp: no admissible path (band too narrow)");
    return WarpResult{dist, backtrack(d, n, m)};
}

/// Distance only, two rolling rows.
template <class Cost>
double warp_distance(std::size_t n, std::size_t m, Cost&& cost, std::optional<std::size_t> band) {
    std::vector<double> prev(m, kInf), cur(m, kInf);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(cur.begin(), cur.end(), kInf);
        for (std::size_t j = 0; j < m; ++j) {
            if (!in_band(i, j, n, m, band)) continue;
            double best;
            if (i == 0 && j == 0) {
                best = 0.0;
            } else {
                best = kInf;
                if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
                if (i > 0) best = std::min(best, prev[j]);
                if (j > 0) best = std::min(best, cur[j - 1]);
            }
            cur[j] = cost(i, j) + best;
        }
        std::swap(prev, cur);
    }
    return prev[m - 1];
}

inline void require_non_empty(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error("dtw: inputs must be non-empty");
}

inline void require_unit_time(const Series& s, const char* what) {
    if (s.v.size() != s.t.size()) throw Error(std::string(what) + ": value/time length mismatch");
    if (s.size() < 2) throw Error(std::string(what) + ": series needs at least 2 points");
    const double span = s.t.back() - s.t.front();
    if (std::abs(span - 1.0) > 1e-9) throw Error(std::string(what) + ": time base is not normalized to unit span");
}

}  // namespace detail

/// Classic DTW with absolute-difference cell cost.
inline WarpResult dtw(std::span<const double> a, std::span<const double> b, std::optional<std::size_t> band = {}) {
    detail::require_non_empty(a, b);
    return detail::warp(a.size(), b.size(), [&](std::size_t i, std::size_t j) { return std::abs(a[i] - b[j]); }, band);
}

inline double dtw_distance(std::span<const double> a, std::span<const double> b, std::optional<std::size_t> band = {}) {
    detail::require_non_empty(a, b);
    return detail::warp_distance(a.size(), b.size(), [&](std::size_t i, std::size_t j) { return std::abs(a[i] - b[j]); }, band);
}

/// Backward difference quotient; index 0 repeats index 1.
inline std::vector<double> derivative(const Series& s) {
    if (s.v.size() != s.t.size()) throw Error("derivative: value/time length mismatch");
    if (s.size() < 2) throw Error("derivative: series needs at least 2 points");
    std::vector<double> d(s.size());
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double dt = s.t[i] - s.t[i - 1];
        if (!(dt > 0.0)) throw Error("derivative: time stamps must be strictly increasing");
        d[i] = (s.v[i] - s.v[i - 1]) / dt;
    }
    d[0] = d[1];
    return d;
}

/// Derivative DTW: cell cost compares local slopes.
inline WarpResult ddtw(const Series& a, const Series& b, std::optional<std::size_t> band = {}) {
    const auto da = derivative(a);
    const auto db = derivative(b);
    return detail::warp(da.size(), db.size(), [&](std::size_t i, std::size_t j) { return std::abs(da[i] - db[j]); }, band);
}

/// Information-injected DDTW. The slope difference of cell (i, j) is scaled
/// by (1 + lambda * |t_a[i] - t_b[j]|) on unit-span time bases.
inline WarpResult ii_ddtw(const Series& a, const Series& b, const IIDDTWParams& params = {}) {
    detail::require_unit_time(a, "ii_ddtw");
    detail::require_unit_time(b, "ii_ddtw");
    if (!(params.lambda >= 0.0)) throw Error("ii_ddtw: lambda must be non-negative");
    const auto da = derivative(a);
    const auto db = derivative(b);
    const double lambda = params.lambda;
    const double a0 = a.t.front();
    const double b0 = b.t.front();
    return detail::warp(
        da.size(), db.size(),
        [&](std::size_t i, std::size_t j) {
            return (1.0 + lambda * std::abs((a.t[i] - a0) - (b.t[j] - b0))) * std::abs(da[i] - db[j]);
        },
        params.band);
}

/// Rescale time stamps to [0, 1].
inline std::vector<double> normalize_time(std::span<const double> t) {
    if (t.size() < 2) throw Error("normalize_time: need at least 2 time stamps");
    const double span = t.back() - t.front();
    if (!(span > 0.0)) throw Error("normalize_time: zero time span");
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = (t[i] - t.front()) / span;
    out.back() = 1.0;
    return out;
}

/// Uniform samples on a unit-span time base.
inline Series template_series(std::span<const double> values) {
    if (values.size() < 2) throw Error("template_series: need at least 2 samples");
    Series s;
    s.v.assign(values.begin(), values.end());
    s.t.resize(values.size());
    const double last = static_cast<double>(values.size() - 1);
    for (std::size_t j = 0; j < values.size(); ++j) s.t[j] = static_cast<double>(j) / last;
    return s;
}

/// Event beat prepared for matching. Events sharing a time stamp (several
/// levels crossed within one sampling interval) collapse into one point that
/// holds the last level reached.
struct EventPoints {
    Series series;
    std::vector<std::size_t> point_of_event;  // event index -> series index
};

inline EventPoints event_points(const EventBeat& eb) {
    if (eb.events.size() < 2) throw Error("event_points: beat needs at least 2 events");
    EventPoints out;
    std::vector<double> times;
    out.point_of_event.resize(eb.events.size());
    for (std::size_t k = 0; k < eb.events.size(); ++k) {
        const auto& e = eb.events[k];
        if (!times.empty() && e.t < times.back()) throw Error("event_points: events out of time order");
        if (!times.empty() && e.t == times.back()) {
            out.series.v.back() = e.v;
        } else {
            times.push_back(e.t);
            out.series.v.push_back(e.v);
        }
        out.point_of_event[k] = times.size() - 1;
    }
    if (times.size() < 2) throw Error("event_points: beat spans a single instant");
    out.series.t = normalize_time(times);
    return out;
}

struct TemplateRanking {
    std::size_t index = 0;  // position of the winner in the candidate list
    std::int64_t id = 0;
    WarpResult warp;
    std::vector<double> distances;  // per candidate, in list order
};

/// Match an event beat against every template and keep the closest one.
/// Ties go to the lowest template id.
inline TemplateRanking rank_templates(const EventBeat& eb, std::span<const Template> templates, const IIDDTWParams& params = {}) {
    if (templates.empty()) throw Error("rank_templates: empty templates set");
    const EventPoints pts = event_points(eb);
    TemplateRanking best;
    best.distances.resize(templates.size());
    bool have = false;
    for (std::size_t k = 0; k < templates.size(); ++k) {
        WarpResult r = ii_ddtw(pts.series, template_series(templates[k].values), params);
        best.distances[k] = r.distance;
        const bool better = !have || r.distance < best.warp.distance ||
                            (r.distance == best.warp.distance && templates[k].id < best.id);
        if (better) {
            best.index = k;
            best.id = templates[k].id;
            best.warp = std::move(r);
            have = true;
        }
    }
    return best;
}

}  // namespace ebecg
