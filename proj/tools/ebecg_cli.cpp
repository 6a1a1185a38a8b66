// Command-line front end: level-crossing sampling, template store
// management, reconstruction, evaluation and the end-to-end pipeline.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ebecg/ebecg.hpp"
#include "ebecg/synthetic.hpp"

namespace {

using namespace ebecg;

struct ConfigFlags {
    PipelineConfig cfg;
    std::string mode = "progressive";
    double ap_preference = 0.0;
    double lc_v_min = 0.0;
    double lc_v_max = 0.0;
};

void add_config_flags(CLI::App* app, ConfigFlags& f) {
    auto& c = f.cfg;
    app->add_option("--bits", c.bits, "LC-ADC resolutions")->delimiter(',')->capture_default_str();
    app->add_option("--lambda", c.lambda, "time-mismatch weight")->capture_default_str();
    app->add_option("--initial-acquire-s", c.initial_acquire_s)->capture_default_str();
    app->add_option("--reacquire-s", c.reacquire_s)->capture_default_str();
    app->add_option("--reference-len", c.reference_len)->capture_default_str();
    app->add_option("--batch-period-s", c.batch_period_s)->capture_default_str();
    app->add_option("--alpha", c.alpha)->capture_default_str();
    app->add_option("--ap-damping", c.ap_damping)->capture_default_str();
    app->add_option("--ap-max-iter", c.ap_max_iter)->capture_default_str();
    app->add_option("--ap-convergence-iter", c.ap_convergence_iter)->capture_default_str();
    app->add_option("--ap-preference", f.ap_preference, "default: median similarity");
    app->add_option("--min-cluster-frac", c.min_cluster_frac)->capture_default_str();
    app->add_option("--snr-db", c.snr_db)->capture_default_str();
    app->add_option("--median-ms", c.median_ms)->capture_default_str();
    app->add_option("--wave-window-s", c.wave_window_s)->capture_default_str();
    app->add_option("--mode", f.mode)->check(CLI::IsMember({"progressive", "initial_only", "single_template"}))->capture_default_str();
    app->add_option("--synthetic-baseline", c.synthetic_baseline)->capture_default_str();
    auto* vmin = app->add_option("--lc-vmin", f.lc_v_min, "lowest level; default: calibration window minimum");
    auto* vmax = app->add_option("--lc-vmax", f.lc_v_max, "highest level; default: calibration window maximum");
    vmin->needs(vmax);
    vmax->needs(vmin);
}

PipelineConfig finish_config(CLI::App* app, ConfigFlags& f) {
    PipelineConfig c = f.cfg;
    c.mode = parse_mode(f.mode);
    if (app->count("--ap-preference")) c.ap_preference = f.ap_preference;
    if (app->count("--lc-vmin")) {
        c.lc_v_min = f.lc_v_min;
        c.lc_v_max = f.lc_v_max;
    }
    c.validate();
    return c;
}

template <class Fn>
void write_file(const std::string& path, Fn&& fn) {
    if (path == "-") {
        fn(std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    fn(out);
}

RecordBundle load_bundle(const std::string& record, const std::string& qrs, const std::string& p, const std::string& t) {
    RecordBundle b;
    b.signal = io::load_record(record);
    b.qrs = io::load_annotations(qrs);
    if (b.qrs.empty()) throw Error(qrs + ": no QRS annotations");
    if (!p.empty()) b.p_marks = io::load_annotations(p);
    if (!t.empty()) b.t_marks = io::load_annotations(t);
    return b;
}

struct Outputs {
    std::string report = "report.json";
    std::string per_beat = "per_beat.csv";
    std::string percentiles;
    std::string trigger_log;
    std::string reconstruction;
    std::string templates_dir;
};

void add_output_flags(CLI::App* app, Outputs& o) {
    app->add_option("--report", o.report, "report JSON")->capture_default_str();
    app->add_option("--per-beat", o.per_beat, "per-beat metrics CSV")->capture_default_str();
    app->add_option("--percentile-beats", o.percentiles, "percentile exemplar beats CSV");
    app->add_option("--trigger-log", o.trigger_log, "trigger events, JSON lines");
    app->add_option("--reconstruction", o.reconstruction, "template reconstruction CSV (prefix; one file per bit depth)");
    app->add_option("--templates-out", o.templates_dir, "directory for the final template store of each bit depth");
}

void emit(const PipelineResult& r, const Outputs& o) {
    write_file(o.report, [&](std::ostream& out) { io::write_report(out, r); });
    write_file(o.per_beat, [&](std::ostream& out) { io::write_per_beat(out, r.rows); });
    if (!o.percentiles.empty()) write_file(o.percentiles, [&](std::ostream& out) { io::write_percentile_beats(out, r); });
    if (!o.trigger_log.empty()) write_file(o.trigger_log, [&](std::ostream& out) { io::write_trigger_log(out, r.trigger_log); });
    for (const auto& run : r.runs) {
        if (!o.reconstruction.empty())
            write_file(o.reconstruction + "_" + std::to_string(run.bits) + "bit.csv",
                       [&](std::ostream& out) { io::write_reconstruction(out, run, "template"); });
        if (!o.templates_dir.empty())
            io::save_templates(o.templates_dir + "/templates_" + std::to_string(run.bits) + "bit.json", run.final_set);
    }
    std::size_t ad = 0;
    for (const auto& run : r.runs) ad += run.ad_evaluations;
    std::fprintf(stderr, "beats=%zu rows=%zu skipped=%zu ad_evaluations=%zu\n", r.n_beats, r.rows.size(), r.skipped.size(), ad);
}

// Config files are flat key=value lists; keys belong to whichever
// subcommand was selected on the command line.
class SubcommandConfig : public CLI::ConfigBase {
public:
    explicit SubcommandConfig(const CLI::App* app) : app_(app) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        auto items = CLI::ConfigBase::from_config(input);
        const auto subs = app_->get_subcommands();
        if (subs.empty()) return items;
        for (auto& item : items)
            if (item.parents.empty()) item.parents = {subs.front()->get_name()};
        return items;
    }

private:
    const CLI::App* app_;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-based ECG sampling and template-based reconstruction"};
    app.set_config("--config", "", "key=value configuration file; flags override it");
    app.config_formatter(std::make_shared<SubcommandConfig>(&app));
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    // sample
    std::string s_record, s_events = "events.csv";
    int s_bits = 4;
    double s_calib = 180.0, s_vmin = 0.0, s_vmax = 0.0;
    auto* sample = app.add_subcommand("sample", "uniform record -> level-crossing events");
    sample->add_option("--record", s_record)->required()->check(CLI::ExistingFile);
    sample->add_option("--bits", s_bits)->capture_default_str();
    sample->add_option("--calibration-s", s_calib, "level range from this leading span")->capture_default_str();
    auto* sv0 = sample->add_option("--lc-vmin", s_vmin);
    auto* sv1 = sample->add_option("--lc-vmax", s_vmax);
    sv0->needs(sv1);
    sv1->needs(sv0);
    sample->add_option("--out", s_events)->capture_default_str();

    // templates
    std::string t_record, t_qrs, t_store, t_out = "templates.json";
    double t_from = 0.0, t_len = 180.0;
    ConfigFlags t_flags;
    auto* templates = app.add_subcommand("templates", "cluster a uniform span into a template store, or merge into an existing one");
    templates->add_option("--record", t_record)->required()->check(CLI::ExistingFile);
    templates->add_option("--qrs", t_qrs)->required()->check(CLI::ExistingFile);
    templates->add_option("--from", t_from, "acquisition start (s)")->capture_default_str();
    templates->add_option("--length", t_len, "acquisition length (s)")->capture_default_str();
    templates->add_option("--update", t_store, "existing store to merge into")->check(CLI::ExistingFile);
    templates->add_option("--out", t_out)->capture_default_str();
    add_config_flags(templates, t_flags);

    // reconstruct
    std::string r_events, r_qrs, r_store, r_out = "reconstruction.csv", r_method = "template";
    double r_fs = 0.0, r_lambda = 1.0, r_baseline = 0.0;
    auto* reconstruct_cmd = app.add_subcommand("reconstruct", "events + templates -> beats on the uniform grid");
    reconstruct_cmd->add_option("--events", r_events)->required()->check(CLI::ExistingFile);
    reconstruct_cmd->add_option("--qrs", r_qrs)->required()->check(CLI::ExistingFile);
    reconstruct_cmd->add_option("--templates", r_store, "required for --method template")->check(CLI::ExistingFile);
    reconstruct_cmd->add_option("--method", r_method)->check(CLI::IsMember(method_names()))->capture_default_str();
    reconstruct_cmd->add_option("--fs", r_fs, "output grid rate; default: template rate");
    reconstruct_cmd->add_option("--lambda", r_lambda)->capture_default_str();
    reconstruct_cmd->add_option("--synthetic-baseline", r_baseline)->capture_default_str();
    reconstruct_cmd->add_option("--out", r_out)->capture_default_str();

    // eval and pipeline share inputs
    std::string e_record, e_qrs, e_p, e_t, e_store;
    ConfigFlags e_flags;
    Outputs e_out;
    auto* eval = app.add_subcommand("eval", "compare template reconstruction with a fixed store against the baselines");
    eval->add_option("--record", e_record)->required()->check(CLI::ExistingFile);
    eval->add_option("--qrs", e_qrs)->required()->check(CLI::ExistingFile);
    eval->add_option("--p-marks", e_p)->check(CLI::ExistingFile);
    eval->add_option("--t-marks", e_t)->check(CLI::ExistingFile);
    eval->add_option("--templates", e_store)->required()->check(CLI::ExistingFile);
    e_flags.mode = "initial_only";
    add_config_flags(eval, e_flags);
    add_output_flags(eval, e_out);

    std::string p_record, p_qrs, p_p, p_t;
    ConfigFlags p_flags;
    Outputs p_out;
    auto* pipeline = app.add_subcommand("pipeline", "end-to-end run with template acquisition, drift trigger and updates");
    pipeline->add_option("--record", p_record)->required()->check(CLI::ExistingFile);
    pipeline->add_option("--qrs", p_qrs)->required()->check(CLI::ExistingFile);
    pipeline->add_option("--p-marks", p_p)->check(CLI::ExistingFile);
    pipeline->add_option("--t-marks", p_t)->check(CLI::ExistingFile);
    add_config_flags(pipeline, p_flags);
    add_output_flags(pipeline, p_out);

    // synth
    std::string y_prefix = "synth";
    std::size_t y_beats = 200, y_switch = 0;
    synth::Params y_params;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic record with QRS, P and T marks");
    synth_cmd->add_option("--prefix", y_prefix, "writes <prefix>_record.csv, _qrs.csv, _p.csv, _t.csv")->capture_default_str();
    synth_cmd->add_option("--beats", y_beats)->capture_default_str();
    synth_cmd->add_option("--switch-at", y_switch, "beat index where the alternate morphology starts (0: never)");
    synth_cmd->add_option("--fs", y_params.fs)->capture_default_str();
    synth_cmd->add_option("--mean-rr", y_params.mean_rr)->capture_default_str();
    synth_cmd->add_option("--noise-sd", y_params.noise_sd)->capture_default_str();
    synth_cmd->add_option("--seed", y_params.seed)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sample) {
            const auto sig = io::load_record(s_record);
            const LevelGrid grid = sample->count("--lc-vmin") ? LevelGrid{s_bits, s_vmin, s_vmax} : calibrated_grid(sig, s_bits, s_calib);
            grid.validate();
            const auto events = lc_sample(sig, grid);
            write_file(s_events, [&](std::ostream& out) { io::write_events(out, events); });
            std::fprintf(stderr, "events=%zu srf=%s\n", real_event_count(events), io::fmt(srf(sig.size(), real_event_count(events))).c_str());
        } else if (*templates) {
            const PipelineConfig cfg = finish_config(templates, t_flags);
            const auto sig = io::load_record(t_record);
            const auto windows = beat_windows(io::load_annotations(t_qrs));
            std::vector<UniformBeat> beats;
            for (const auto& w : windows)
                if (w.t_start >= t_from - 1e-9 && w.t_end <= t_from + t_len + 1e-9) beats.push_back(slice_uniform(sig, w));
            const auto clustered = cluster_beats(beats, cfg.clustering());
            std::int64_t next_id = 0;
            TemplatesSet set;
            if (t_store.empty()) {
                set = initial_templates_set(clustered.candidates, next_id, t_from + t_len);
            } else {
                const auto old = io::load_templates(t_store);
                for (const auto& t : old.templates) next_id = std::max(next_id, t.id + 1);
                const auto merged = update_templates_set(old, clustered.candidates, next_id, t_from + t_len);
                for (const auto& rec : merged.log)
                    std::fprintf(stderr, "%s id=%lld\n", to_string(rec.action), static_cast<long long>(rec.template_id));
                set = merged.set;
            }
            io::save_templates(t_out, set);
            std::fprintf(stderr, "beats=%zu templates=%zu\n", beats.size(), set.size());
        } else if (*reconstruct_cmd) {
            const auto events = io::load_events(r_events);
            const auto windows = beat_windows(io::load_annotations(r_qrs));
            TemplatesSet set;
            if (!r_store.empty()) set = io::load_templates(r_store);
            if (r_method == "template" && set.empty()) throw Error("reconstruct: --templates is required for the template method");
            double fs = r_fs > 0.0 ? r_fs : (set.empty() ? 0.0 : set.templates.front().fs);
            if (!(fs > 0.0)) throw Error("reconstruct: give --fs");
            UniformSignal span_sig;
            span_sig.fs = fs;
            span_sig.values.assign(static_cast<std::size_t>(std::ceil(windows.back().t_end * fs)) + 1, 0.0);
            std::vector<ReconstructedBeat> out;
            std::vector<std::size_t> ids;
            for (std::size_t k = 0; k < windows.size(); ++k) {
                const auto eb = slice_events(events, windows[k], r_baseline);
                const auto grid = window_grid(span_sig, windows[k]);
                try {
                    if (r_method == "template")
                        out.push_back(reconstruct(eb, set.templates, grid, IIDDTWParams{r_lambda, std::nullopt}).beat);
                    else if (r_method == "linear")
                        out.push_back(linear_interp(eb, grid).beat);
                    else if (r_method == "sample_hold")
                        out.push_back(sample_hold(eb, grid).beat);
                    else
                        out.push_back(quad_spline(eb, grid).beat);
                    ids.push_back(k);
                } catch (const Error& e) {
                    std::fprintf(stderr, "beat %zu skipped: %s\n", k, e.what());
                }
            }
            write_file(r_out, [&](std::ostream& os) { io::write_beats(os, out, ids); });
        } else if (*eval) {
            PipelineConfig cfg = finish_config(eval, e_flags);
            const auto bundle = load_bundle(e_record, e_qrs, e_p, e_t);
            const auto set = io::load_templates(e_store);
            emit(run_pipeline(bundle, cfg, surrogate_detector(), &set), e_out);
        } else if (*pipeline) {
            const PipelineConfig cfg = finish_config(pipeline, p_flags);
            const auto bundle = load_bundle(p_record, p_qrs, p_p, p_t);
            emit(run_pipeline(bundle, cfg, surrogate_detector()), p_out);
        } else if (*synth_cmd) {
            const std::vector<synth::Morphology> morphs{synth::normal_morphology(), synth::alternate_morphology()};
            std::vector<std::size_t> schedule(y_beats, 0);
            if (y_switch > 0)
                for (std::size_t k = y_switch; k < y_beats; ++k) schedule[k] = 1;
            const auto rec = synth::generate(morphs, schedule, y_params);
            write_file(y_prefix + "_record.csv", [&](std::ostream& out) { io::write_record(out, rec.signal); });
            write_file(y_prefix + "_qrs.csv", [&](std::ostream& out) { io::write_annotations(out, rec.qrs); });
            write_file(y_prefix + "_p.csv", [&](std::ostream& out) { io::write_annotations(out, rec.p_marks); });
            write_file(y_prefix + "_t.csv", [&](std::ostream& out) { io::write_annotations(out, rec.t_marks); });
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
