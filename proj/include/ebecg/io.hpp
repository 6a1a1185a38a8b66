#pragma once

// File formats: record and annotation CSV input, event/path/beat CSV output,
// template store and report JSON. Floats are written with 9 significant
// digits everywhere.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebecg/pipeline.hpp"
#include "ebecg/template.hpp"
#include "ebecg/types.hpp"
#include "ebecg/warping.hpp"

namespace ebecg::io {

using nlohmann::json;

inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

/// Value rounded to 9 significant digits, for JSON emission. Non-finite
/// values become null.
inline json num(double x) {
    if (!std::isfinite(x)) return nullptr;
    return std::strtod(fmt(x).c_str(), nullptr);
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline double to_double(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw Error(where + ": not a number: '" + s + "'");
    return v;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    return out;
}

}  // namespace detail

// ---- record and annotations ----

/// Record CSV: either a `# fs=<float>` header followed by one value per line,
/// or two columns `t,v` on a uniform time base (an optional non-numeric
/// header row is skipped).
inline UniformSignal parse_record(std::istream& in, const std::string& name = "record") {
    UniformSignal sig;
    std::vector<double> times;
    bool have_fs = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string where = name + ":" + std::to_string(lineno);
        if (line[0] == '#') {
            const auto pos = line.find("fs=");
            if (pos != std::string::npos) {
                sig.fs = detail::to_double(detail::trim(line.substr(pos + 3)), where);
                have_fs = true;
            }
            continue;
        }
        const auto cols = detail::split(line);
        if (cols.size() == 1) {
            if (!have_fs) throw Error(where + ": single-column record needs a '# fs=' header");
            sig.values.push_back(detail::to_double(cols[0], where));
        } else if (cols.size() == 2) {
            if (have_fs) throw Error(where + ": two-column rows after an fs header");
            char* end = nullptr;
            std::strtod(cols[0].c_str(), &end);
            if (times.empty() && sig.values.empty() && end == cols[0].c_str()) continue;  // header row
            times.push_back(detail::to_double(cols[0], where));
            sig.values.push_back(detail::to_double(cols[1], where));
        } else {
            throw Error(where + ": expected 1 or 2 columns");
        }
    }
    if (!have_fs) {
        if (times.size() < 2) throw Error(name + ": need at least two t,v rows to infer fs");
        const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
        if (!(dt > 0.0)) throw Error(name + ": time column must increase");
        for (std::size_t k = 1; k < times.size(); ++k)
            if (std::abs(times[k] - times[0] - static_cast<double>(k) * dt) > 1e-3 * dt)
                throw Error(name + ": time column is not uniform at row " + std::to_string(k + 1));
        sig.fs = 1.0 / dt;
        sig.t0 = times.front();
    }
    sig.validate();
    return sig;
}

inline UniformSignal load_record(const std::string& path) {
    auto in = detail::open_in(path);
    return parse_record(in, path);
}

inline void write_record(std::ostream& out, const UniformSignal& sig) {
    out << "# fs=" << fmt(sig.fs) << '\n';
    for (double v : sig.values) out << fmt(v) << '\n';
}

/// One timestamp (seconds) per line; `#` lines and a leading header are skipped.
inline std::vector<double> parse_annotations(std::istream& in, const std::string& name = "annotations") {
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto cols = detail::split(line);
        char* end = nullptr;
        std::strtod(cols[0].c_str(), &end);
        if (out.empty() && end == cols[0].c_str()) continue;
        out.push_back(detail::to_double(cols[0], name + ":" + std::to_string(lineno)));
    }
    for (std::size_t k = 1; k < out.size(); ++k)
        if (!(out[k] > out[k - 1])) throw Error(name + ": timestamps must increase");
    return out;
}

inline std::vector<double> load_annotations(const std::string& path) {
    auto in = detail::open_in(path);
    return parse_annotations(in, path);
}

inline void write_annotations(std::ostream& out, std::span<const double> times) {
    for (double t : times) out << fmt(t) << '\n';
}

// ---- events and paths ----

inline void write_events(std::ostream& out, std::span<const EventSample> events) {
    out << "t,v,synthetic\n";
    for (const auto& e : events) out << fmt(e.t) << ',' << fmt(e.v) << ',' << (e.synthetic ? 1 : 0) << '\n';
}

inline EventStream parse_events(std::istream& in, const std::string& name = "events") {
    EventStream out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
        const auto cols = detail::split(line);
        const std::string where = name + ":" + std::to_string(lineno);
        if (cols.size() < 2 || cols.size() > 3) throw Error(where + ": expected t,v[,synthetic]");
        EventSample e{detail::to_double(cols[0], where), detail::to_double(cols[1], where), false};
        if (cols.size() == 3) e.synthetic = cols[2] == "1" || cols[2] == "true";
        if (!out.empty() && e.t < out.back().t) throw Error(where + ": event times must not decrease");
        out.push_back(e);
    }
    return out;
}

inline EventStream load_events(const std::string& path) {
    auto in = detail::open_in(path);
    return parse_events(in, path);
}

inline void write_path(std::ostream& out, const WarpResult& w) {
    out << "i,j\n";
    for (const auto& [i, j] : w.path) out << i << ',' << j << '\n';
}

// ---- templates ----

inline json to_json(const Template& t) {
    json vals = json::array();
    for (double v : t.values) vals.push_back(num(v));
    return json{{"id", t.id},
                {"fs", num(t.fs)},
                {"source_beat", t.source_beat},
                {"source_time", num(t.source_time)},
                {"snr_db", num(t.snr_db)},
                {"cluster_mean_d", num(t.cluster_mean_d)},
                {"cluster_std_d", num(t.cluster_std_d)},
                {"dist_to_centroid", num(t.dist_to_centroid)},
                {"generation", t.generation},
                {"values", vals}};
}

inline json to_json(const TemplatesSet& s) {
    json arr = json::array();
    for (const auto& t : s.templates) arr.push_back(to_json(t));
    return json{{"generation", s.generation}, {"created_at", num(s.created_at)}, {"templates", arr}};
}

namespace detail {
inline double get_num(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::numeric_limits<double>::infinity();
    return v.get<double>();
}
}  // namespace detail

inline TemplatesSet templates_from_json(const json& j) {
    TemplatesSet s;
    try {
        s.generation = j.at("generation").get<std::int64_t>();
        s.created_at = j.at("created_at").get<double>();
        for (const auto& jt : j.at("templates")) {
            Template t;
            t.id = jt.at("id").get<std::int64_t>();
            t.fs = jt.at("fs").get<double>();
            t.source_beat = jt.value("source_beat", std::int64_t{-1});
            t.source_time = jt.value("source_time", 0.0);
            t.snr_db = detail::get_num(jt, "snr_db");
            t.cluster_mean_d = jt.at("cluster_mean_d").get<double>();
            t.cluster_std_d = jt.at("cluster_std_d").get<double>();
            t.dist_to_centroid = jt.at("dist_to_centroid").get<double>();
            t.generation = jt.at("generation").get<std::int64_t>();
            t.values = jt.at("values").get<std::vector<double>>();
            if (t.values.empty()) throw Error("template store: template with no values");
            s.templates.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw Error(std::string("template store: ") + e.what());
    }
    return s;
}

inline void save_templates(const std::string& path, const TemplatesSet& s) {
    auto out = detail::open_out(path);
    out << to_json(s).dump(2) << '\n';
}

inline TemplatesSet load_templates(const std::string& path) {
    auto in = detail::open_in(path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
    return templates_from_json(j);
}

// ---- beats ----

/// Long-format beat samples: beat,index,t,v.
inline void write_beats(std::ostream& out, std::span<const ReconstructedBeat> beats, std::span<const std::size_t> ids = {}) {
    out << "beat,index,t,v\n";
    for (std::size_t b = 0; b < beats.size(); ++b) {
        const auto id = ids.empty() ? b : ids[b];
        for (std::size_t i = 0; i < beats[b].values.size(); ++i)
            out << id << ',' << i << ',' << fmt(beats[b].grid.time(i)) << ',' << fmt(beats[b].values[i]) << '\n';
    }
}

// ---- report ----

inline json to_json(const PipelineConfig& c) {
    json j{{"bits", c.bits},
           {"lambda", num(c.lambda)},
           {"initial_acquire_s", num(c.initial_acquire_s)},
           {"reacquire_s", num(c.reacquire_s)},
           {"reference_len", c.reference_len},
           {"batch_period_s", num(c.batch_period_s)},
           {"alpha", num(c.alpha)},
           {"ap_damping", num(c.ap_damping)},
           {"ap_max_iter", c.ap_max_iter},
           {"ap_convergence_iter", c.ap_convergence_iter},
           {"ap_preference", c.ap_preference ? num(*c.ap_preference) : json(nullptr)},
           {"min_cluster_frac", num(c.min_cluster_frac)},
           {"snr_db", num(c.snr_db)},
           {"median_ms", num(c.median_ms)},
           {"wave_window_s", num(c.wave_window_s)},
           {"mode", to_string(c.mode)},
           {"synthetic_baseline", num(c.synthetic_baseline)},
           {"lc_v_min", c.lc_v_min ? num(*c.lc_v_min) : json(nullptr)},
           {"lc_v_max", c.lc_v_max ? num(*c.lc_v_max) : json(nullptr)}};
    return j;
}

inline json to_json(const Distribution& d) {
    json pct = json::object();
    for (std::size_t k = 0; k < kPercentiles.size(); ++k)
        pct["p" + std::to_string(static_cast<int>(kPercentiles[k]))] = num(d.percentiles[k]);
    return json{{"count", d.count}, {"mean", num(d.mean)}, {"std", num(d.std)}, {"percentiles", pct}, {"median_beat", d.median_beat}};
}

inline json report_json(const PipelineResult& r) {
    json srf = json::array();
    for (const auto& [bits, v] : r.srf) srf.push_back({{"bits", bits}, {"srf", num(v)}});
    json aggs = json::array();
    for (const auto& a : r.aggregates)
        aggs.push_back({{"method", a.method}, {"bits", a.bits}, {"prd", to_json(a.prd)}, {"dtw", to_json(a.dtw)}});
    json waves = json::array();
    for (const auto& w : r.wave_stats)
        waves.push_back({{"method", w.method},
                         {"bits", w.bits},
                         {"wave", to_string(w.wave)},
                         {"tp", w.match.tp},
                         {"fp", w.match.fp},
                         {"fn", w.match.fn},
                         {"sensitivity", num(w.match.sensitivity)},
                         {"ppv", num(w.match.ppv)},
                         {"f1", num(w.match.f1)}});
    json skipped{{"count", r.skipped.size()}, {"entries", json::array()}};
    for (const auto& s : r.skipped)
        skipped["entries"].push_back({{"beat", s.beat}, {"method", s.method}, {"bits", s.bits}, {"reason", s.reason}});
    return json{{"config", to_json(r.config)}, {"srf", srf}, {"aggregates", aggs}, {"wave_stats", waves}, {"skipped", skipped}};
}

inline void write_report(std::ostream& out, const PipelineResult& r) { out << report_json(r).dump(2) << '\n'; }

/// Per-beat metric rows in pipeline order: beat,method,bits,prd,dtw.
inline void write_per_beat(std::ostream& out, std::span<const BeatRow> rows) {
    out << "beat,method,bits,prd,dtw\n";
    for (const auto& r : rows) out << r.beat << ',' << r.method << ',' << r.bits << ',' << fmt(r.prd) << ',' << fmt(r.dtw) << '\n';
}

/// For every (method, bits, metric, percentile) the beat nearest that
/// percentile, with original and reconstructed samples, for plotting.
inline void write_percentile_beats(std::ostream& out, const PipelineResult& r) {
    out << "method,bits,metric,percentile,beat,index,t,original,reconstructed\n";
    for (const auto& agg : r.aggregates) {
        const BitsRun* run = nullptr;
        for (const auto& br : r.runs)
            if (br.bits == agg.bits) run = &br;
        if (!run) continue;
        std::vector<double> prd_v, dtw_v;
        std::vector<std::size_t> ids;
        for (const auto& row : r.rows) {
            if (row.method != agg.method || row.bits != agg.bits) continue;
            prd_v.push_back(row.prd);
            dtw_v.push_back(row.dtw);
            ids.push_back(row.beat);
        }
        const std::array<std::pair<const char*, const Distribution*>, 2> metrics{{{"prd", &agg.prd}, {"dtw", &agg.dtw}}};
        for (const auto& [metric, dist] : metrics) {
            const auto& vals = std::string(metric) == "prd" ? prd_v : dtw_v;
            for (std::size_t k = 0; k < kPercentiles.size(); ++k) {
                const std::size_t beat = nearest_beat(vals, ids, dist->percentiles[k]);
                const BeatOutput* bo = nullptr;
                for (const auto& b : run->beats)
                    if (b.beat == beat) bo = &b;
                if (!bo) continue;
                const auto it = bo->methods.find(agg.method);
                if (it == bo->methods.end()) continue;
                for (std::size_t i = 0; i < bo->original.size(); ++i)
                    out << agg.method << ',' << agg.bits << ',' << metric << ',' << static_cast<int>(kPercentiles[k]) << ','
                        << beat << ',' << i << ',' << fmt(bo->grid.time(i)) << ',' << fmt(bo->original[i]) << ','
                        << fmt(it->second[i]) << '\n';
            }
        }
    }
}

/// Reconstructed record for one bits run and method, long format.
inline void write_reconstruction(std::ostream& out, const BitsRun& run, const std::string& method) {
    std::vector<ReconstructedBeat> beats;
    std::vector<std::size_t> ids;
    for (const auto& b : run.beats) {
        const auto it = b.methods.find(method);
        if (it == b.methods.end()) continue;
        beats.push_back({it->second, b.grid, b.window});
        ids.push_back(b.beat);
    }
    write_beats(out, beats, ids);
}

inline json to_json(const TriggerLogEntry& e) {
    json j{{"bits", e.bits}, {"time", num(e.time)}, {"event", e.event}, {"templates", e.templates}};
    if (e.event == "batch") {
        j["batch_size"] = e.batch_size;
        j["statistic"] = num(e.statistic);
        j["p_value"] = num(e.p_value);
        j["failed"] = e.failed;
    }
    if (!e.actions.empty()) j[e.event == "reacquisition_failed" ? "reason" : "actions"] = e.actions;
    return j;
}

/// One JSON object per line.
inline void write_trigger_log(std::ostream& out, std::span<const TriggerLogEntry> log) {
    for (const auto& e : log) out << to_json(e).dump() << '\n';
}

}  // namespace ebecg::io
