#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ebecg {

/// Raised for violated preconditions and malformed inputs.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniformly sampled signal; sample k sits at t0 + k / fs.
struct UniformSignal {
    std::vector<double> values;
    double fs = 0.0;
    double t0 = 0.0;

    [[nodiscard]] double time(std::size_t k) const { return t0 + static_cast<double>(k) / fs; }
    [[nodiscard]] std::size_t size() const { return values.size(); }

    void validate() const {
        if (!(fs > 0.0)) throw Error("UniformSignal: fs must be positive");
        if (values.empty()) throw Error("UniformSignal: empty signal");
    }
};

/// A level-crossing event. Synthetic events are window boundary fillers and
/// carry no level guarantee.
struct EventSample {
    double t = 0.0;
    double v = 0.0;
    bool synthetic = false;

    friend bool operator==(const EventSample&, const EventSample&) = default;
};

using EventStream = std::vector<EventSample>;

/// Beat window [t_start, t_end). `closed_end` makes the upper bound inclusive,
/// used for the last beat of a record.
struct Window {
    double t_start = 0.0;
    double t_end = 0.0;
    double qrs_time = 0.0;
    bool truncated = false;
    bool closed_end = false;

    [[nodiscard]] double length() const { return t_end - t_start; }
    [[nodiscard]] bool contains(double t) const {
        return t >= t_start && (closed_end ? t <= t_end : t < t_end);
    }
};

/// Contiguous run of record samples: indices first .. first + count - 1 of a
/// uniform grid anchored at t0.
struct SampleGrid {
    double t0 = 0.0;
    double fs = 0.0;
    std::size_t first = 0;
    std::size_t count = 0;

    [[nodiscard]] double time(std::size_t i) const {
        return t0 + static_cast<double>(first + i) / fs;
    }
};

/// Per-heartbeat slice of an event stream. The first and last entries sit at
/// the window boundaries (synthetic if no real event was there).
struct EventBeat {
    EventStream events;
    Window window;

    [[nodiscard]] std::size_t real_count() const {
        std::size_t n = 0;
        for (const auto& e : events) n += e.synthetic ? 0 : 1;
        return n;
    }
};

/// Per-heartbeat slice of a uniform signal.
struct UniformBeat {
    std::vector<double> values;
    SampleGrid grid;
    Window window;
    bool clipped = false;

    [[nodiscard]] double fs() const { return grid.fs; }
};

/// Reconstruction or baseline output on the beat's record grid.
struct ReconstructedBeat {
    std::vector<double> values;
    SampleGrid grid;
    Window window;
};

namespace detail {

// Grid index arithmetic tolerates round-off in t * fs.
inline constexpr double kIndexEps = 1e-9;

inline long long ceil_index(double x) { return static_cast<long long>(std::ceil(x - kIndexEps)); }
inline long long floor_index(double x) { return static_cast<long long>(std::floor(x + kIndexEps)); }

}  // namespace detail

}  // namespace ebecg
