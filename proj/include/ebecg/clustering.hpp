#pragma once

// Template candidates from uniformly sampled beats: min-max normalization,
// DTW affinity propagation, cluster dominance and SNR filtering.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "ebecg/parallel.hpp"
#include "ebecg/template.hpp"
#include "ebecg/types.hpp"
#include "ebecg/warping.hpp"

namespace ebecg {

/// Dense row-major square matrix.
struct SquareMatrix {
    std::size_t n = 0;
    std::vector<double> data;

    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t size, double fill = 0.0) : n(size), data(size * size, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
};

struct NormalizedBeat {
    std::vector<double> values;
    double offset = 0.0;  // original minimum
    double scale = 1.0;   // original max - min

    [[nodiscard]] std::vector<double> invert() const {
        std::vector<double> out(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * scale + offset;
        return out;
    }
};

/// Affine map onto [0, 1]. Constant input is rejected.
inline NormalizedBeat minmax_normalize(std::span<const double> values) {
    if (values.empty()) throw Error("minmax_normalize: empty beat");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (!(*hi > *lo)) throw Error("minmax_normalize: constant beat");
    NormalizedBeat out;
    out.offset = *lo;
    out.scale = *hi - *lo;
    out.values.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = (values[i] - out.offset) / out.scale;
    return out;
}

/// Symmetric matrix of DTW distances between all pairs of series.
inline SquareMatrix pairwise_dtw(std::span<const std::vector<double>> series) {
    const std::size_t n = series.size();
    SquareMatrix d(n, 0.0);
    detail::parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) d(i, j) = dtw_distance(series[i], series[j]);
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d(j, i) = d(i, j);
    return d;
}

struct APParams {
    double damping = 0.9;
    int max_iter = 1000;
    int convergence_iter = 50;
    std::optional<double> preference;  // default: median off-diagonal similarity
};

struct ClusterOutcome {
    std::vector<std::size_t> exemplars;            // sorted dataset indices
    std::vector<std::size_t> assignment;           // point -> exemplar index (dataset index)
    std::vector<std::vector<std::size_t>> members;  // per exemplar, ascending
    std::vector<std::vector<double>> within_dists;  // per exemplar, aligned with members
    double preference = 0.0;
    int iterations = 0;
    bool converged = true;
};

/// Median of the off-diagonal entries.
inline double median_off_diagonal(const SquareMatrix& s) {
    std::vector<double> v;
    v.reserve(s.n * (s.n - 1));
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t j = 0; j < s.n; ++j)
            if (i != j) v.push_back(s(i, j));
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

namespace detail {

// Deterministic jitter in [-1, 1) (splitmix64).
struct Jitter {
    std::uint64_t state;
    double next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-52 - 1.0;
    }
};

inline void label_points(const SquareMatrix& s, std::vector<std::size_t>& exemplars, std::vector<std::size_t>& label) {
    const std::size_t n = s.n;
    label.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < exemplars.size(); ++k)
            if (s(i, exemplars[k]) > s(i, exemplars[best])) best = k;
        label[i] = best;
    }
    for (std::size_t k = 0; k < exemplars.size(); ++k) label[exemplars[k]] = k;
}

}  // namespace detail

/// Affinity propagation by responsibility/availability message passing.
/// `similarity` off-diagonal entries are used as given; the diagonal is
/// replaced by the (uniform) preference. Exemplars are always data points.
inline ClusterOutcome affinity_propagation(const SquareMatrix& similarity, const APParams& params = {}) {
    const std::size_t n = similarity.n;
    if (n == 0) throw Error("affinity_propagation: empty dataset");
    if (!(params.damping >= 0.5 && params.damping < 1.0)) throw Error("affinity_propagation: damping must lie in [0.5, 1)");
    if (params.convergence_iter < 1 || params.max_iter < 1) throw Error("affinity_propagation: iteration caps must be positive");

    ClusterOutcome out;
    out.preference = params.preference.value_or(median_off_diagonal(similarity));

    auto finish = [&](std::vector<std::size_t> exemplars) {
        std::sort(exemplars.begin(), exemplars.end());
        out.exemplars = exemplars;
        out.assignment.assign(n, 0);
        out.members.assign(exemplars.size(), {});
        std::vector<std::size_t> label;
        detail::label_points(similarity, exemplars, label);
        for (std::size_t i = 0; i < n; ++i) {
            out.assignment[i] = exemplars[label[i]];
            out.members[label[i]].push_back(i);
        }
        out.within_dists.assign(exemplars.size(), {});
        for (std::size_t k = 0; k < exemplars.size(); ++k)
            for (std::size_t i : out.members[k]) out.within_dists[k].push_back(i == exemplars[k] ? 0.0 : -similarity(i, exemplars[k]));
        return out;
    };

    if (n == 1) return finish({0});

    // Every off-diagonal similarity identical: messages carry no information.
    {
        const double s01 = similarity(0, 1);
        bool all_equal = true;
        for (std::size_t i = 0; i < n && all_equal; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && similarity(i, j) != s01) {
                    all_equal = false;
                    break;
                }
        if (all_equal) {
            if (out.preference > s01) {
                std::vector<std::size_t> all(n);
                std::iota(all.begin(), all.end(), std::size_t{0});
                return finish(all);
            }
            return finish({0});
        }
    }

    SquareMatrix s = similarity;
    for (std::size_t i = 0; i < n; ++i) s(i, i) = out.preference;
    {
        detail::Jitter jitter{0x5eed};
        constexpr double eps = std::numeric_limits<double>::epsilon();
        constexpr double tiny = std::numeric_limits<double>::min();
        for (double& x : s.data) x += (eps * std::abs(x) + tiny * 100.0) * jitter.next();
    }

    SquareMatrix r(n, 0.0), a(n, 0.0), tmp(n, 0.0);
    const double lam = params.damping;
    // Decisions alone can sit still for the whole window while heavily damped
    // messages are still drifting; the messages must have settled as well.
    double scale = std::abs(out.preference);
    for (double x : similarity.data) scale = std::max(scale, std::abs(x));
    const double settle_tol = 1e-6 * std::max(scale, 1e-300);
    const auto conv = static_cast<std::size_t>(params.convergence_iter);
    std::vector<std::vector<bool>> history(n, std::vector<bool>(conv, false));
    std::vector<bool> is_exemplar(n, false);
    bool converged = false;
    int it = 0;
    for (; it < params.max_iter; ++it) {
        double delta = 0.0;
        // responsibilities
        for (std::size_t i = 0; i < n; ++i) {
            double y1 = -std::numeric_limits<double>::infinity();
            double y2 = y1;
            std::size_t arg = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const double v = a(i, k) + s(i, k);
                if (v > y1) {
                    y2 = y1;
                    y1 = v;
                    arg = k;
                } else if (v > y2) {
                    y2 = v;
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                const double fresh = s(i, k) - (k == arg ? y2 : y1);
                const double next = lam * r(i, k) + (1.0 - lam) * fresh;
                delta = std::max(delta, std::abs(next - r(i, k)));
                r(i, k) = next;
            }
        }
        // availabilities
        for (std::size_t k = 0; k < n; ++k) {
            double col = 0.0;
            for (std::size_t i = 0; i < n; ++i) col += i == k ? r(k, k) : std::max(0.0, r(i, k));
            for (std::size_t i = 0; i < n; ++i) {
                const double rp = i == k ? r(k, k) : std::max(0.0, r(i, k));
                double fresh = col - rp;
                if (i != k) fresh = std::min(0.0, fresh);
                const double next = lam * a(i, k) + (1.0 - lam) * fresh;
                delta = std::max(delta, std::abs(next - a(i, k)));
                a(i, k) = next;
            }
        }
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            is_exemplar[i] = a(i, i) + r(i, i) > 0.0;
            history[i][static_cast<std::size_t>(it) % conv] = is_exemplar[i];
            count += is_exemplar[i] ? 1 : 0;
        }
        if (static_cast<std::size_t>(it) >= conv) {
            bool stable = true;
            for (std::size_t i = 0; i < n && stable; ++i) {
                const auto c = static_cast<std::size_t>(std::count(history[i].begin(), history[i].end(), true));
                stable = c == 0 || c == conv;
            }
            if (stable && count > 0 && delta <= settle_tol) {
                converged = true;
                ++it;
                break;
            }
        }
    }
    out.iterations = it;
    out.converged = converged;

    std::vector<std::size_t> ex;
    for (std::size_t i = 0; i < n; ++i)
        if (is_exemplar[i]) ex.push_back(i);
    if (ex.empty()) {
        // No positive self-evidence: fall back to the strongest candidate.
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (a(i, i) + r(i, i) > a(best, best) + r(best, best)) best = i;
        ex.push_back(best);
        out.converged = false;
    }

    // Refine: each cluster's exemplar becomes the member with the largest
    // summed similarity to the rest of the cluster.
    std::vector<std::size_t> label;
    detail::label_points(s, ex, label);
    for (std::size_t k = 0; k < ex.size(); ++k) {
        double best_sum = -std::numeric_limits<double>::infinity();
        std::size_t best = ex[k];
        for (std::size_t j = 0; j < n; ++j) {
            if (label[j] != k) continue;
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (label[i] == k) sum += s(i, j);
            if (sum > best_sum) {
                best_sum = sum;
                best = j;
            }
        }
        ex[k] = best;
    }
    std::sort(ex.begin(), ex.end());
    ex.erase(std::unique(ex.begin(), ex.end()), ex.end());
    return finish(ex);
}

/// Net similarity of an exemplar set: every non-exemplar contributes its best
/// similarity to an exemplar, every exemplar contributes the preference.
inline double ap_objective(const SquareMatrix& similarity, std::span<const std::size_t> exemplars, double preference) {
    double total = 0.0;
    for (std::size_t i = 0; i < similarity.n; ++i) {
        if (std::find(exemplars.begin(), exemplars.end(), i) != exemplars.end()) {
            total += preference;
            continue;
        }
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k : exemplars) best = std::max(best, similarity(i, k));
        total += best;
    }
    return total;
}

/// Signal-to-noise ratio in dB: the signal estimate is a running median over
/// `median_ms` (odd width, edge samples replicated), the noise is the
/// residual. A zero residual yields +infinity.
inline double snr_estimate(std::span<const double> values, double fs, double median_ms = 24.0) {
    if (!(fs > 0.0)) throw Error("snr_estimate: fs must be positive");
    auto width = static_cast<std::size_t>(std::max(1.0, std::round(median_ms * 1e-3 * fs)));
    if (width % 2 == 0) ++width;
    if (values.size() <= width) throw Error("snr_estimate: beat shorter than the median filter");
    const std::size_t half = width / 2;
    const auto n = static_cast<long long>(values.size());
    std::vector<double> window(width);
    double p_signal = 0.0;
    double p_noise = 0.0;
    for (long long i = 0; i < n; ++i) {
        for (std::size_t w = 0; w < width; ++w) {
            const long long idx = std::clamp<long long>(i - static_cast<long long>(half) + static_cast<long long>(w), 0, n - 1);
            window[w] = values[static_cast<std::size_t>(idx)];
        }
        std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(half), window.end());
        const double est = window[half];
        const double noise = values[static_cast<std::size_t>(i)] - est;
        p_signal += est * est;
        p_noise += noise * noise;
    }
    if (p_noise == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(p_signal / p_noise);
}

struct FilterParams {
    double min_cluster_frac = 0.05;
    double snr_db = 17.0;
    double median_ms = 24.0;
};

/// A filtered cluster together with the template drawn from it.
struct TemplateCandidate {
    Template tpl;
    std::size_t exemplar = 0;              // dataset index of the cluster exemplar
    std::vector<double> centroid;          // normalized exemplar beat
    std::vector<std::size_t> members;      // dataset indices
    std::vector<double> member_dists;      // DTW of each member to the exemplar
};

struct ClusteringInput {
    std::span<const UniformBeat> beats;          // raw beats
    std::span<const std::vector<double>> normalized;  // aligned with beats
};

/// Drop clusters smaller than min_cluster_frac of the dataset, then take from
/// each survivor the member nearest to the exemplar whose SNR clears the
/// threshold. Throws when nothing survives.
inline std::vector<TemplateCandidate> filter_centroids(const ClusterOutcome& outcome, const ClusteringInput& input,
                                                       const FilterParams& params = {}) {
    const std::size_t n = input.beats.size();
    if (outcome.assignment.size() != n || input.normalized.size() != n)
        throw Error("filter_centroids: outcome does not match the beat set");
    std::vector<TemplateCandidate> out;
    for (std::size_t c = 0; c < outcome.exemplars.size(); ++c) {
        const auto& members = outcome.members[c];
        const auto& dists = outcome.within_dists[c];
        if (static_cast<double>(members.size()) < params.min_cluster_frac * static_cast<double>(n)) continue;

        std::vector<std::size_t> order(members.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            if (dists[x] != dists[y]) return dists[x] < dists[y];
            return members[x] < members[y];
        });
        for (std::size_t o : order) {
            const UniformBeat& beat = input.beats[members[o]];
            double snr;
            try {
                snr = snr_estimate(beat.values, beat.fs(), params.median_ms);
            } catch (const Error&) {
                continue;
            }
            if (!(snr >= params.snr_db)) continue;

            TemplateCandidate cand;
            cand.exemplar = outcome.exemplars[c];
            cand.centroid = input.normalized[cand.exemplar];
            cand.members = members;
            cand.member_dists = dists;
            double mean = 0.0;
            for (double d : dists) mean += d;
            mean /= static_cast<double>(dists.size());
            double var = 0.0;
            for (double d : dists) var += (d - mean) * (d - mean);
            var /= static_cast<double>(dists.size());

            Template& t = cand.tpl;
            t.values = beat.values;
            t.fs = beat.fs();
            t.source_beat = static_cast<std::int64_t>(members[o]);
            t.source_time = beat.window.qrs_time;
            t.snr_db = snr;
            t.cluster_mean_d = mean;
            t.cluster_std_d = std::sqrt(var);
            t.dist_to_centroid = dists[o];
            out.push_back(std::move(cand));
            break;
        }
    }
    if (out.empty()) throw Error("filter_centroids: no cluster passed the filters; use a longer acquisition window");
    return out;
}

struct ClusteringParams {
    APParams ap;
    FilterParams filter;
};

struct ClusteringResult {
    std::vector<TemplateCandidate> candidates;  // source_beat refers to the input beat list
    ClusterOutcome outcome;                     // over the non-constant beats
    std::vector<std::size_t> used;              // input indices that entered clustering
};

/// Normalize, cluster and filter a set of uniformly sampled beats. Constant
/// beats are left out.
inline ClusteringResult cluster_beats(std::span<const UniformBeat> beats, const ClusteringParams& params = {}) {
    ClusteringResult res;
    std::vector<UniformBeat> kept;
    std::vector<std::vector<double>> norm;
    for (std::size_t i = 0; i < beats.size(); ++i) {
        const auto [lo, hi] = std::minmax_element(beats[i].values.begin(), beats[i].values.end());
        if (beats[i].values.size() < 2 || !(*hi > *lo)) continue;
        res.used.push_back(i);
        kept.push_back(beats[i]);
        norm.push_back(minmax_normalize(beats[i].values).values);
    }
    if (kept.empty()) throw Error("cluster_beats: no usable beats");
    const SquareMatrix d = pairwise_dtw(norm);
    SquareMatrix sim(d.n);
    for (std::size_t i = 0; i < d.data.size(); ++i) sim.data[i] = -d.data[i];
    res.outcome = affinity_propagation(sim, params.ap);
    res.candidates = filter_centroids(res.outcome, ClusteringInput{kept, norm}, params.filter);
    for (auto& c : res.candidates) c.tpl.source_beat = static_cast<std::int64_t>(res.used[static_cast<std::size_t>(c.tpl.source_beat)]);
    return res;
}

}  // namespace ebecg
