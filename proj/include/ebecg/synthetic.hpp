#pragma once

// Sum-of-Gaussians ECG generator with per-beat deformation, for tests and
// demos. Every beat carries its QRS time and the P and T peak times.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ebecg/types.hpp"

namespace ebecg::synth {

struct Wave {
    double offset_s;   // peak time relative to the QRS
    double width_s;    // Gaussian sigma
    double amplitude;  // signal units
};

struct Morphology {
    std::vector<Wave> waves;
    std::size_t p_wave = 0;
    std::size_t t_wave = 0;
};

/// Upright P and T, narrow QRS.
inline Morphology normal_morphology() {
    return Morphology{{{-0.20, 0.025, 0.15},
                       {-0.035, 0.008, -0.12},
                       {0.0, 0.011, 1.0},
                       {0.035, 0.009, -0.25},
                       {0.30, 0.045, 0.30}},
                      0,
                      4};
}

/// Flattened P, wide low QRS, inverted T.
inline Morphology alternate_morphology() {
    return Morphology{{{-0.17, 0.020, 0.07},
                       {0.0, 0.020, 0.65},
                       {0.05, 0.016, -0.45},
                       {0.33, 0.050, -0.28}},
                      0,
                      3};
}

struct Params {
    double fs = 128.0;
    double mean_rr = 0.8;        // seconds
    double rr_jitter = 0.03;     // relative sd
    double amp_jitter = 0.06;    // relative sd per wave
    double width_jitter = 0.06;  // relative sd per wave
    double offset_jitter = 0.008;  // seconds sd per wave
    double noise_sd = 0.004;
    double first_qrs = 0.6;
    std::uint64_t seed = 1;
};

struct Record {
    UniformSignal signal;
    std::vector<double> qrs;
    std::vector<double> p_marks;
    std::vector<double> t_marks;
    std::vector<std::size_t> morphology;  // per beat
};

/// `schedule[k]` picks the morphology of beat k.
inline Record generate(std::span<const Morphology> morphs, std::span<const std::size_t> schedule, const Params& p = {}) {
    if (morphs.empty() || schedule.empty()) throw Error("synth::generate: nothing to generate");
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    struct Placed {
        double center, width, amp;
    };
    std::vector<Placed> placed;
    Record rec;
    double t = p.first_qrs;
    double last_rr = p.mean_rr;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (schedule[k] >= morphs.size()) throw Error("synth::generate: schedule names an unknown morphology");
        const Morphology& m = morphs[schedule[k]];
        const double stretch = std::sqrt(last_rr / p.mean_rr);
        rec.qrs.push_back(t);
        rec.morphology.push_back(schedule[k]);
        for (std::size_t w = 0; w < m.waves.size(); ++w) {
            const Wave& wv = m.waves[w];
            const double center = t + wv.offset_s * stretch + p.offset_jitter * gauss(rng);
            const double width = wv.width_s * std::max(0.3, 1.0 + p.width_jitter * gauss(rng));
            const double amp = wv.amplitude * (1.0 + p.amp_jitter * gauss(rng));
            placed.push_back({center, width, amp});
            if (w == m.p_wave) rec.p_marks.push_back(center);
            if (w == m.t_wave) rec.t_marks.push_back(center);
        }
        last_rr = p.mean_rr * std::max(0.5, 1.0 + p.rr_jitter * gauss(rng));
        t += last_rr;
    }
    const double t_end = rec.qrs.back() + 0.6 * last_rr + 0.5;
    const auto n = static_cast<std::size_t>(std::ceil(t_end * p.fs));
    rec.signal.fs = p.fs;
    rec.signal.t0 = 0.0;
    rec.signal.values.assign(n, 0.0);
    for (const auto& w : placed) {
        const auto lo = static_cast<long long>(std::floor((w.center - 6.0 * w.width) * p.fs));
        const auto hi = static_cast<long long>(std::ceil((w.center + 6.0 * w.width) * p.fs));
        for (long long i = std::max(0LL, lo); i <= hi && i < static_cast<long long>(n); ++i) {
            const double x = (static_cast<double>(i) / p.fs - w.center) / w.width;
            rec.signal.values[static_cast<std::size_t>(i)] += w.amp * std::exp(-0.5 * x * x);
        }
    }
    if (p.noise_sd > 0.0)
        for (double& v : rec.signal.values) v += p.noise_sd * gauss(rng);
    return rec;
}

/// n beats of a single morphology.
inline Record generate(const Morphology& m, std::size_t n_beats, const Params& p = {}) {
    const std::vector<Morphology> morphs{m};
    const std::vector<std::size_t> schedule(n_beats, 0);
    return generate(morphs, schedule, p);
}

}  // namespace ebecg::synth
