#pragma once

#include <cstdint>
#include <vector>

#include "ebecg/types.hpp"

namespace ebecg {

/// Representative heartbeat chosen from a cluster of uniformly sampled beats.
/// Values are kept in raw signal units; the cluster statistics describe the
/// DTW spread of the cluster it was drawn from (normalized beats).
struct Template {
    std::int64_t id = 0;
    std::vector<double> values;
    double fs = 0.0;
    std::int64_t source_beat = -1;   // beat index in the acquisition record
    double source_time = 0.0;        // QRS time of the source beat
    double snr_db = 0.0;
    double cluster_mean_d = 0.0;
    double cluster_std_d = 0.0;
    double dist_to_centroid = 0.0;   // DTW between this beat and its cluster exemplar
    std::int64_t generation = 0;     // set generation that introduced it
};

struct TemplatesSet {
    std::vector<Template> templates;
    double created_at = 0.0;
    std::int64_t generation = 0;

    [[nodiscard]] bool empty() const { return templates.empty(); }
    [[nodiscard]] std::size_t size() const { return templates.size(); }
};

}  // namespace ebecg
