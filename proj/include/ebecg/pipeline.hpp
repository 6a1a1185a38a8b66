#pragma once

// End-to-end run over one record: initial uniform acquisition and clustering,
// level-crossing acquisition per bit depth, per-beat template matching and
// reconstruction, drift monitoring with re-acquisition and set merging, and
// evaluation against the resampling baselines.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ebecg/baselines.hpp"
#include "ebecg/clustering.hpp"
#include "ebecg/lc_sampler.hpp"
#include "ebecg/metrics.hpp"
#include "ebecg/reconstruction.hpp"
#include "ebecg/segmentation.hpp"
#include "ebecg/template_manager.hpp"

namespace ebecg {

enum class TemplateMode { progressive, initial_only, single_template };

inline const char* to_string(TemplateMode m) {
    switch (m) {
        case TemplateMode::progressive: return "progressive";
        case TemplateMode::initial_only: return "initial_only";
        case TemplateMode::single_template: return "single_template";
    }
    return "?";
}

inline TemplateMode parse_mode(const std::string& s) {
    if (s == "progressive") return TemplateMode::progressive;
    if (s == "initial_only") return TemplateMode::initial_only;
    if (s == "single_template") return TemplateMode::single_template;
    throw Error("unknown mode: " + s);
}

struct PipelineConfig {
    std::vector<int> bits{3, 4, 5};
    double lambda = 1.0;
    double initial_acquire_s = 180.0;
    double reacquire_s = 40.0;
    std::size_t reference_len = 400;
    double batch_period_s = 60.0;
    double alpha = 0.05;
    double ap_damping = 0.9;
    int ap_max_iter = 1000;
    int ap_convergence_iter = 50;
    std::optional<double> ap_preference;
    double min_cluster_frac = 0.05;
    double snr_db = 17.0;
    double median_ms = 24.0;
    double wave_window_s = 0.15;
    TemplateMode mode = TemplateMode::progressive;
    double synthetic_baseline = 0.0;
    std::optional<double> lc_v_min;  // level range; default: calibration window min/max
    std::optional<double> lc_v_max;

    void validate() const {
        if (bits.empty()) throw Error("config: bits list is empty");
        for (int b : bits)
            if (b < 1 || b > 24) throw Error("config: bits must lie in 1..24");
        if (!(lambda >= 0.0)) throw Error("config: lambda must be non-negative");
        if (!(initial_acquire_s > 0.0 && reacquire_s > 0.0)) throw Error("config: acquisition times must be positive");
        if (reference_len < 5) throw Error("config: reference_len must be >= 5");
        if (!(batch_period_s > 0.0)) throw Error("config: batch_period_s must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw Error("config: alpha must lie in (0, 1)");
        if (!(ap_damping >= 0.5 && ap_damping < 1.0)) throw Error("config: ap damping must lie in [0.5, 1)");
        if (ap_max_iter < 1 || ap_convergence_iter < 1) throw Error("config: ap iteration caps must be positive");
        if (!(min_cluster_frac >= 0.0 && min_cluster_frac < 1.0)) throw Error("config: min_cluster_frac must lie in [0, 1)");
        if (!(median_ms > 0.0 && wave_window_s > 0.0)) throw Error("config: median_ms and wave_window_s must be positive");
        if (lc_v_min.has_value() != lc_v_max.has_value()) throw Error("config: set both lc_v_min and lc_v_max or neither");
        if (lc_v_min && !(*lc_v_max > *lc_v_min)) throw Error("config: lc_v_max must exceed lc_v_min");
    }

    [[nodiscard]] ClusteringParams clustering() const {
        ClusteringParams p;
        p.ap = APParams{ap_damping, ap_max_iter, ap_convergence_iter, ap_preference};
        p.filter = FilterParams{min_cluster_frac, snr_db, median_ms};
        return p;
    }
};

enum class WaveKind { p, t };

inline const char* to_string(WaveKind w) { return w == WaveKind::p ? "P" : "T"; }

/// Delineator hook: wave peak times found in one reconstructed beat.
using WaveDetector = std::function<std::vector<double>(WaveKind, const ReconstructedBeat&)>;

struct RecordBundle {
    UniformSignal signal;
    std::vector<double> qrs;
    std::vector<double> p_marks;  // reference marks, optional
    std::vector<double> t_marks;
};

inline const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names{"template", "linear", "sample_hold", "quad_spline"};
    return names;
}

struct BeatOutput {
    std::size_t beat = 0;
    Window window;
    SampleGrid grid;
    std::vector<double> original;
    std::map<std::string, std::vector<double>> methods;
    std::int64_t template_id = -1;
    double match_distance = 0.0;
};

struct SkipEntry {
    std::size_t beat = 0;
    std::string method;
    int bits = 0;
    std::string reason;
};

/// Trigger and template-set events, one JSON line each in the trigger log.
struct TriggerLogEntry {
    int bits = 0;
    double time = 0.0;
    std::string event;  // batch | recompute | templates_initial | templates_update | reacquisition_failed | reacquisition_incomplete
    std::size_t batch_size = 0;
    double statistic = 0.0;
    double p_value = 0.0;
    bool failed = false;
    std::size_t templates = 0;
    std::vector<std::string> actions;  // merge actions, for templates_update
};

struct WaveStat {
    std::string method;
    int bits = 0;
    WaveKind wave = WaveKind::p;
    WaveMatch match;
};

struct BitsRun {
    int bits = 0;
    LevelGrid grid;
    std::size_t n_events = 0;
    double srf = 0.0;
    std::vector<BeatOutput> beats;
    TemplatesSet initial_set;
    TemplatesSet final_set;
    std::size_t ad_evaluations = 0;
    std::size_t recomputes = 0;
};

struct PipelineResult {
    PipelineConfig config;
    std::vector<BeatRow> rows;
    std::vector<MethodAggregate> aggregates;
    std::vector<std::pair<int, double>> srf;
    std::vector<WaveStat> wave_stats;
    std::vector<SkipEntry> skipped;
    std::vector<TriggerLogEntry> trigger_log;
    std::vector<BitsRun> runs;
    std::size_t n_beats = 0;
};

namespace detail {

inline std::vector<double> marks_in(const std::vector<double>& marks, const Window& w) {
    std::vector<double> out;
    for (double m : marks)
        if (w.contains(m)) out.push_back(m);
    return out;
}

inline std::vector<TemplateCandidate> cluster_window(const UniformSignal& signal, std::span<const Window> windows,
                                                     double t_from, double t_to, const PipelineConfig& cfg) {
    std::vector<UniformBeat> beats;
    std::vector<std::size_t> record_index;
    for (std::size_t k = 0; k < windows.size(); ++k) {
        const Window& w = windows[k];
        if (w.t_start < t_from - 1e-9 && w.qrs_time < t_from) continue;
        if (w.t_end > t_to + 1e-9) break;
        try {
            beats.push_back(slice_uniform(signal, w));
            record_index.push_back(k);
        } catch (const Error&) {
        }
    }
    if (beats.size() < 2) throw Error("template acquisition: fewer than 2 beats in the acquisition window");
    auto cands = cluster_beats(beats, cfg.clustering()).candidates;
    for (auto& c : cands) c.tpl.source_beat = static_cast<std::int64_t>(record_index[static_cast<std::size_t>(c.tpl.source_beat)]);
    return cands;
}

}  // namespace detail

/// Run the whole pipeline on one record. Deterministic for a given bundle and
/// config. Throws when the initial clustering yields no template; per-beat
/// failures are recorded in `skipped`.
///
/// With `preset` the initial acquisition is skipped and that set is used
/// from the first beat on.
inline PipelineResult run_pipeline(const RecordBundle& bundle, const PipelineConfig& cfg, const WaveDetector& detector = {},
                                   const TemplatesSet* preset = nullptr) {
    cfg.validate();
    bundle.signal.validate();
    PipelineResult res;
    res.config = cfg;
    const auto windows = beat_windows(bundle.qrs);
    res.n_beats = windows.size();
    const UniformSignal& sig = bundle.signal;
    const double t_begin = sig.t0;
    const IIDDTWParams match_params{cfg.lambda, std::nullopt};
    const bool have_waves = static_cast<bool>(detector) && (!bundle.p_marks.empty() || !bundle.t_marks.empty());

    // Initial uniform acquisition, shared by every bit depth.
    const double acq_end = preset ? t_begin : t_begin + acquisition_plan(true, {cfg.initial_acquire_s, cfg.reacquire_s});
    std::vector<TemplateCandidate> initial;
    if (preset) {
        if (preset->empty()) throw Error("pipeline: preset templates set is empty");
    } else {
        try {
            initial = detail::cluster_window(sig, windows, t_begin, acq_end, cfg);
        } catch (const Error& e) {
            throw Error(std::string("pipeline: initial template set could not be built: ") + e.what());
        }
    }
    if (!preset && cfg.mode == TemplateMode::single_template) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < initial.size(); ++c)
            if (initial[c].members.size() > initial[best].members.size()) best = c;
        initial = {initial[best]};
    }

    std::map<std::pair<std::string, int>, std::array<WaveMatch, 2>> waves;

    for (int bits : cfg.bits) {
        BitsRun run;
        run.bits = bits;
        run.grid = cfg.lc_v_min ? LevelGrid{bits, *cfg.lc_v_min, *cfg.lc_v_max} : calibrated_grid(sig, bits, cfg.initial_acquire_s);
        const EventStream events = lc_sample(sig, run.grid);
        run.n_events = real_event_count(events);
        run.srf = srf(sig.size(), run.n_events);
        res.srf.emplace_back(bits, run.srf);

        std::int64_t next_id = 0;
        TemplatesSet set;
        if (preset) {
            set = *preset;
            for (const auto& t : set.templates) next_id = std::max(next_id, t.id + 1);
        } else {
            set = initial_templates_set(initial, next_id, acq_end);
        }
        run.initial_set = set;
        res.trigger_log.push_back({bits, acq_end, "templates_initial", 0, 0, 0, false, set.size(), {}});

        TriggerState trigger({cfg.reference_len, cfg.batch_period_s, cfg.alpha, 2});
        double ready_time = acq_end;
        bool reacquiring = false;
        double reacq_from = 0.0;
        double reacq_end = 0.0;

        for (std::size_t k = 0; k < windows.size(); ++k) {
            const Window& w = windows[k];
            auto skip_all = [&](const std::string& why) {
                for (const auto& m : method_names()) res.skipped.push_back({k, m, bits, why});
            };
            UniformBeat ub;
            try {
                ub = slice_uniform(sig, w);
            } catch (const Error& e) {
                skip_all(e.what());
                continue;
            }
            const EventBeat eb = slice_events(events, w, cfg.synthetic_baseline);

            BeatOutput out;
            out.beat = k;
            out.window = w;
            out.grid = ub.grid;
            out.original = ub.values;
            std::optional<double> match_distance;
            try {
                const Reconstruction rec = reconstruct(eb, set.templates, ub.grid, match_params);
                out.methods["template"] = rec.beat.values;
                out.template_id = rec.template_id;
                out.match_distance = rec.distance;
                match_distance = rec.distance;
            } catch (const Error& e) {
                res.skipped.push_back({k, "template", bits, e.what()});
            }
            out.methods["linear"] = linear_interp(eb, ub.grid).beat.values;
            out.methods["sample_hold"] = sample_hold(eb, ub.grid).beat.values;
            out.methods["quad_spline"] = quad_spline(eb, ub.grid).beat.values;

            for (const auto& name : method_names()) {
                auto it = out.methods.find(name);
                if (it == out.methods.end()) continue;
                try {
                    res.rows.push_back({k, name, bits, prd(ub.values, it->second), dtw_metric(ub.values, it->second)});
                } catch (const Error& e) {
                    res.skipped.push_back({k, name, bits, e.what()});
                    continue;
                }
                if (have_waves) {
                    const ReconstructedBeat rb{it->second, ub.grid, w};
                    auto& acc = waves[{name, bits}];
                    const std::array<const std::vector<double>*, 2> refs{&bundle.p_marks, &bundle.t_marks};
                    for (int wi = 0; wi < 2; ++wi) {
                        if (refs[static_cast<std::size_t>(wi)]->empty()) continue;
                        const auto kind = wi == 0 ? WaveKind::p : WaveKind::t;
                        const auto ref = detail::marks_in(*refs[static_cast<std::size_t>(wi)], w);
                        const auto found = detector(kind, rb);
                        acc[static_cast<std::size_t>(wi)] += match_waves(ref, found, cfg.wave_window_s);
                    }
                }
            }
            run.beats.push_back(std::move(out));

            if (cfg.mode != TemplateMode::progressive || w.qrs_time < ready_time) continue;

            if (reacquiring) {
                if (w.t_end <= reacq_end + 1e-9) continue;
                // Re-acquisition window complete: cluster, merge, restart.
                try {
                    const auto cands = detail::cluster_window(sig, windows, reacq_from, reacq_end, cfg);
                    const MergeResult merged = update_templates_set(set, cands, next_id, reacq_end);
                    set = merged.set;
                    TriggerLogEntry le{bits, reacq_end, "templates_update", 0, 0, 0, false, set.size(), {}};
                    for (const auto& rec : merged.log) le.actions.push_back(to_string(rec.action));
                    res.trigger_log.push_back(std::move(le));
                } catch (const Error& e) {
                    res.trigger_log.push_back({bits, reacq_end, "reacquisition_failed", 0, 0, 0, false, set.size(), {e.what()}});
                }
                trigger.restart_reference();
                reacquiring = false;
                ready_time = w.qrs_time;
                continue;
            }
            if (!match_distance) continue;
            if (auto ev = trigger.observe(*match_distance, w.qrs_time)) {
                res.trigger_log.push_back({bits, ev->time, "batch", ev->batch_size, ev->ad.statistic, ev->ad.p_value, ev->failed, set.size(), {}});
                if (ev->recompute) {
                    ++run.recomputes;
                    res.trigger_log.push_back({bits, ev->time, "recompute", 0, 0, 0, false, set.size(), {}});
                    reacquiring = true;
                    reacq_from = w.t_end;
                    reacq_end = w.t_end + acquisition_plan(false, {cfg.initial_acquire_s, cfg.reacquire_s});
                }
            }
        }
        if (reacquiring) res.trigger_log.push_back({bits, reacq_end, "reacquisition_incomplete", 0, 0, 0, false, set.size(), {}});
        run.ad_evaluations = trigger.evaluations();
        run.final_set = set;
        res.runs.push_back(std::move(run));
    }

    if (!res.rows.empty()) res.aggregates = aggregate(res.rows);
    for (const auto& [key, acc] : waves) {
        if (!bundle.p_marks.empty()) res.wave_stats.push_back({key.first, key.second, WaveKind::p, acc[0]});
        if (!bundle.t_marks.empty()) res.wave_stats.push_back({key.first, key.second, WaveKind::t, acc[1]});
    }
    return res;
}

}  // namespace ebecg
