#pragma once

// Templates-set lifecycle: acquisition timing, the distribution-drift trigger
// and the merge of a freshly clustered set into the current one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ebecg/clustering.hpp"
#include "ebecg/stats.hpp"
#include "ebecg/template.hpp"
#include "ebecg/warping.hpp"

namespace ebecg {

struct TriggerParams {
    std::size_t reference_len = 400;
    double batch_period_s = 60.0;
    double alpha = 0.05;
    int failures_to_fire = 2;
};

enum class TriggerPhase { collecting_reference, monitoring, reacquiring };

inline const char* to_string(TriggerPhase p) {
    switch (p) {
        case TriggerPhase::collecting_reference: return "collecting_reference";
        case TriggerPhase::monitoring: return "monitoring";
        case TriggerPhase::reacquiring: return "reacquiring";
    }
    return "?";
}

/// One evaluated test batch.
struct BatchEvaluation {
    double time = 0.0;  // record time at which the batch closed
    std::size_t batch_size = 0;
    ADResult ad;
    bool failed = false;
    bool recompute = false;
};

/// Matching-distance monitor. Collects a reference sample, then compares
/// each batch_period_s worth of distances against it; a recompute signal
/// fires after `failures_to_fire` consecutive rejections.
class TriggerState {
public:
    explicit TriggerState(TriggerParams params = {}) : params_(params) {
        if (params_.reference_len < 5) throw Error("TriggerState: reference_len must be >= 5");
        if (!(params_.batch_period_s > 0.0)) throw Error("TriggerState: batch_period_s must be positive");
        if (!(params_.alpha > 0.0 && params_.alpha < 1.0)) throw Error("TriggerState: alpha must lie in (0, 1)");
        reference_.reserve(params_.reference_len);
    }

    /// Feed one distance observed at record time `now`. Returns the batch
    /// evaluation when a batch closed on this call.
    std::optional<BatchEvaluation> observe(double d, double now) {
        if (!(d >= 0.0)) throw Error("TriggerState: distances must be non-negative");
        switch (phase_) {
            case TriggerPhase::reacquiring:
                return std::nullopt;
            case TriggerPhase::collecting_reference:
                reference_.push_back(d);
                if (reference_.size() >= params_.reference_len) {
                    phase_ = TriggerPhase::monitoring;
                    batch_start_ = now;
                    batch_.clear();
                }
                return std::nullopt;
            case TriggerPhase::monitoring:
                break;
        }
        std::optional<BatchEvaluation> result;
        if (now >= batch_start_ + params_.batch_period_s) {
            result = close_batch(now);
            while (now >= batch_start_ + params_.batch_period_s) batch_start_ += params_.batch_period_s;
        }
        if (phase_ == TriggerPhase::monitoring) batch_.push_back(d);
        return result;
    }

    /// Start over with an empty reference (after a set update).
    void restart_reference() {
        phase_ = TriggerPhase::collecting_reference;
        reference_.clear();
        batch_.clear();
        consecutive_failures_ = 0;
    }

    [[nodiscard]] TriggerPhase phase() const { return phase_; }
    [[nodiscard]] int consecutive_failures() const { return consecutive_failures_; }
    [[nodiscard]] std::size_t evaluations() const { return evaluations_; }
    [[nodiscard]] std::span<const double> reference() const { return reference_; }
    [[nodiscard]] std::span<const double> batch() const { return batch_; }
    [[nodiscard]] const TriggerParams& params() const { return params_; }

private:
    BatchEvaluation close_batch(double now) {
        BatchEvaluation ev;
        ev.time = now;
        ev.batch_size = batch_.size();
        bool tested = false;
        if (batch_.size() >= 5) {
            try {
                ev.ad = ad_two_sample(reference_, batch_);
                tested = true;
            } catch (const Error&) {
                // degenerate batch (a single distinct value overall): not evaluable
            }
        }
        if (tested) {
            ++evaluations_;
            ev.failed = ev.ad.p_value < params_.alpha;
            consecutive_failures_ = ev.failed ? consecutive_failures_ + 1 : 0;
            if (consecutive_failures_ >= params_.failures_to_fire) {
                ev.recompute = true;
                phase_ = TriggerPhase::reacquiring;
                consecutive_failures_ = 0;
            }
        }
        batch_.clear();
        return ev;
    }

    TriggerParams params_;
    TriggerPhase phase_ = TriggerPhase::collecting_reference;
    std::vector<double> reference_;
    std::vector<double> batch_;
    double batch_start_ = 0.0;
    int consecutive_failures_ = 0;
    std::size_t evaluations_ = 0;
};

struct AcquisitionParams {
    double initial_s = 180.0;
    double reacquire_s = 40.0;
};

/// Uniform acquisition length: long the first time, short on re-computation.
inline double acquisition_plan(bool first_time, const AcquisitionParams& params = {}) {
    return first_time ? params.initial_s : params.reacquire_s;
}

/// Outcome of one template in the set merge.
enum class MergeAction { keep_old_unmatched, keep_old_represents, update_old, insert_new };

inline const char* to_string(MergeAction a) {
    switch (a) {
        case MergeAction::keep_old_unmatched: return "keep_old";
        case MergeAction::keep_old_represents: return "keep_old";
        case MergeAction::update_old: return "update_old";
        case MergeAction::insert_new: return "insert_new";
    }
    return "?";
}

struct MergeRecord {
    MergeAction action;
    std::int64_t template_id;  // id of the template placed in the new set
    std::optional<std::size_t> cluster;  // candidate index, when a cluster was involved
};

struct MergeResult {
    TemplatesSet set;
    std::vector<MergeRecord> log;
    bool warning_empty_candidates = false;
};

/// DTW between a template (normalized on the fly) and a normalized centroid.
inline double dist_from_centroid(const Template& t, std::span<const double> centroid) {
    return dtw_distance(minmax_normalize(t.values).values, centroid);
}

/// Merge newly clustered candidates into the current set.
///
/// Every old template is compared with its nearest new cluster; if it lies
/// within mean + std of that cluster's member distances it becomes a
/// candidate representative of the cluster, otherwise it is kept. Each new
/// cluster then keeps its nearest old candidate when that one is at least as
/// close to the centroid as the new template, else takes the new template.
/// Clusters without old candidates are inserted.
///
/// New templates receive ids starting at `next_id`, which is advanced.
inline MergeResult update_templates_set(const TemplatesSet& old_set, std::span<const TemplateCandidate> candidates,
                                        std::int64_t& next_id, double now = 0.0) {
    MergeResult res;
    res.set.generation = old_set.generation + 1;
    res.set.created_at = now;
    if (candidates.empty()) {
        res.set = old_set;
        res.warning_empty_candidates = true;
        return res;
    }

    auto fresh = [&](const TemplateCandidate& c) {
        Template t = c.tpl;
        t.id = next_id++;
        t.generation = res.set.generation;
        return t;
    };

    // cluster index -> (old template index, distance to centroid)
    std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> near;
    for (std::size_t o = 0; o < old_set.templates.size(); ++o) {
        const Template& old = old_set.templates[o];
        std::size_t nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            const double d = dist_from_centroid(old, candidates[c].centroid);
            if (d < best) {
                best = d;
                nearest = c;
            }
        }
        const Template& nt = candidates[nearest].tpl;
        const double threshold = nt.cluster_mean_d + nt.cluster_std_d;
        if (best <= threshold) {
            near[nearest].emplace_back(o, best);
        } else {
            res.set.templates.push_back(old);
            res.log.push_back({MergeAction::keep_old_unmatched, old.id, std::nullopt});
        }
    }

    for (std::size_t c = 0; c < candidates.size(); ++c) {
        auto it = near.find(c);
        if (it == near.end()) {
            Template t = fresh(candidates[c]);
            res.log.push_back({MergeAction::insert_new, t.id, c});
            res.set.templates.push_back(std::move(t));
            continue;
        }
        const auto& cands = it->second;
        const auto nearest = std::min_element(cands.begin(), cands.end(), [](const auto& x, const auto& y) {
            return x.second < y.second;
        });
        if (nearest->second <= candidates[c].tpl.dist_to_centroid) {
            const Template& old = old_set.templates[nearest->first];
            res.set.templates.push_back(old);
            res.log.push_back({MergeAction::keep_old_represents, old.id, c});
        } else {
            Template t = fresh(candidates[c]);
            res.log.push_back({MergeAction::update_old, t.id, c});
            res.set.templates.push_back(std::move(t));
        }
    }
    return res;
}

/// First templates set from clustering, no merge.
inline TemplatesSet initial_templates_set(std::span<const TemplateCandidate> candidates, std::int64_t& next_id, double now = 0.0) {
    TemplatesSet set;
    set.created_at = now;
    set.generation = 0;
    for (const auto& c : candidates) {
        Template t = c.tpl;
        t.id = next_id++;
        t.generation = 0;
        set.templates.push_back(std::move(t));
    }
    return set;
}

}  // namespace ebecg
