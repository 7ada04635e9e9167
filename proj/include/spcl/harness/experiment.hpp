#pragma once

// Experiment matrix runner and report builder.
//
// Output directory layout:
//   config.ini          copy of the config text that produced the run
//   manifest.tsv        run ids in execution order
//   runs/<id>.trace     one trace file per (paradigm, seed) cell
//   plots/<id>.tsv      per-epoch plot series
//   runs.tsv            one row per run
//   summary.tsv         one row per paradigm
//   breakdown.tsv       navgrid only: per-round success and first-error shares
//
// Every table is rebuilt from the trace files, so `report` on a finished
// directory reproduces it byte for byte.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spcl/harness/config.hpp"
#include "spcl/harness/trace_file.hpp"
#include "spcl/random.hpp"
#include "spcl/tasks/io.hpp"
#include "spcl/tasks/navigation.hpp"
#include "spcl/tasks/synthetic.hpp"
#include "spcl/trainer.hpp"

namespace spcl::harness {

inline constexpr const char* kOutputRootEnv = "SPCL_OUTPUT_ROOT";

/// Relative paths resolve against $SPCL_OUTPUT_ROOT when it is set.
inline std::filesystem::path resolve_output(const std::filesystem::path& p) {
    if (p.is_absolute()) return p;
    const char* root = std::getenv(kOutputRootEnv);
    if (root != nullptr && *root != '\0') return std::filesystem::path(root) / p;
    return p;
}

struct RunArtifact {
    std::string run_id;
    std::string paradigm;
    ParadigmKind kind = ParadigmKind::ML;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    std::vector<std::pair<std::string, double>> final_metrics;
    std::filesystem::path trace_path;
};

struct RunOptions {
    std::optional<std::filesystem::path> output;  // overrides the config's output
    std::string config_text;                      // copied to config.ini when non-empty
    std::ostream* log = nullptr;
    std::function<void(const std::string& run_id)> before_run;  // may throw to fail a cell
};

inline std::string run_id(const std::string& paradigm, std::uint64_t seed) {
    return paradigm + "-s" + std::to_string(seed);
}

/// Fixed 6 significant digits.
inline std::string fmt6(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

/// Standard error with the n-1 sample variance; 0 for a single value.
inline double stderr_of(const std::vector<double>& v) {
    if (v.size() < 2) return v.empty() ? std::nan("") : 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

inline double mean_gap(const TrainTrace& t) { return mean_of(loss_gap_series(t)); }

/// One seed's data, shared read-only by every paradigm.
struct SeedData {
    PredictorSpec spec;
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> eval;
    std::optional<RoomGrid> world;
    std::vector<NavSample> eval_nav;
};

inline SeedData build_seed_data(const ExperimentConfig& cfg, std::uint64_t seed) {
    SeedData d;
    if (cfg.task == TaskKind::Synthetic) {
        const auto& s = cfg.synthetic;
        SyntheticParams held_out = s.data;
        held_out.noise.fill(0.0);
        held_out.flip.fill(0.0);
        d.train = generate_synthetic_dataset(s.train_per_round, derive_seed(seed, 11), s.data).samples;
        d.eval = generate_synthetic_dataset(s.eval_per_round, derive_seed(seed, 12), held_out).samples;
        d.spec = PredictorSpec::linear_regression(kSyntheticFeatures);
    } else {
        const auto& n = cfg.navgrid;
        d.world = generate_room_grid(n.rooms_x, n.rooms_y, n.room_size, n.door_density, derive_seed(seed, 21));
        std::map<int, int> train_counts, eval_counts;
        for (int r = kMinRound; r <= kMaxRound; ++r) {
            train_counts[r] = n.train_per_round;
            eval_counts[r] = n.eval_per_round;
        }
        const auto train = generate_nav_dataset(*d.world, train_counts, derive_seed(seed, 22));
        d.eval_nav = generate_nav_dataset(*d.world, eval_counts, derive_seed(seed, 23)).samples;
        d.train = imitation_examples(*d.world, train.samples);
        d.eval = imitation_examples(*d.world, d.eval_nav);
        const std::size_t dim = step_feature_dim(*d.world);
        d.spec = n.hidden_dim > 0 ? PredictorSpec::mlp(dim, static_cast<std::size_t>(n.hidden_dim), kActionCount)
                                  : PredictorSpec::logistic_regression(dim, kActionCount);
    }
    return d;
}

inline double success_share(const std::vector<EpisodeResult>& episodes) {
    double hits = 0.0;
    for (const auto& e : episodes) hits += e.success ? 1.0 : 0.0;
    return hits / static_cast<double>(episodes.size());
}

/// Trains one cell. The eval metric is accuracy (synthetic) or held-out
/// navigation success (navgrid).
inline TraceFile run_cell(const ExperimentConfig& cfg, const ParadigmEntry& entry, std::uint64_t seed,
                          const SeedData& d) {
    TraceFile t;
    TrainConfig train = cfg.train;
    train.seed = seed;
    TrainHooks hooks;
    if (d.world) {
        hooks.evaluate = [&](const ParameterVector& theta) {
            const auto episodes = evaluate_navigation(d.spec, theta, *d.world, d.eval_nav);
            return EvalMetrics{evaluate(d.spec, theta, d.eval).mean_loss, success_share(episodes)};
        };
    } else {
        hooks.evaluate = [&](const ParameterVector& theta) { return evaluate(d.spec, theta, d.eval); };
    }
    auto result = run_training(entry.paradigm, d.spec, d.train, train, hooks);
    t.trace = std::move(result.trace);
    const auto& last = t.trace.epochs.back();
    t.finals.emplace_back("eval_loss", last.eval_loss);
    t.finals.emplace_back("eval_metric", last.eval_metric);
    t.finals.emplace_back("train_loss", evaluate(d.spec, result.theta, d.train).mean_loss);
    if (t.trace.epochs.size() >= 10)
        t.finals.emplace_back("converged", convergence_check(t.trace, 5, 0.05) ? 1.0 : 0.0);
    if (result.pace) {
        t.finals.emplace_back("lambda", result.pace->lambda);
        t.finals.emplace_back("weight_min", last.weight_min);
        t.finals.emplace_back("weight_mean", last.weight_mean);
    }
    if (d.world) {
        const auto episodes = evaluate_navigation(d.spec, result.theta, *d.world, d.eval_nav);
        for (const auto& [round, rate] : success_rate_by_round(episodes))
            t.finals.emplace_back("success_round" + std::to_string(round), rate);
        const auto dist = first_error_distribution(episodes);
        for (auto kind : {FirstErrorKind::None, FirstErrorKind::In, FirstErrorKind::Cross, FirstErrorKind::Others}) {
            const auto it = dist.find(kind);
            t.finals.emplace_back(std::string("first_error_") + to_string(kind), it == dist.end() ? 0.0 : it->second);
        }
    }
    return t;
}

inline RunArtifact artifact_of(const TraceFile& t, const std::filesystem::path& path) {
    return {t.run, t.paradigm, t.kind, t.seed, t.ok, t.error, t.finals, path};
}

inline void probe_writable(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "runs", ec);
    if (!ec) std::filesystem::create_directories(dir / "plots", ec);
    if (ec) throw IoError("output directory " + dir.string() + " is not writable: " + ec.message());
    const auto probe = dir / ".write-probe";
    {
        std::ofstream out(probe, std::ios::trunc);
        if (!(out << "probe")) throw IoError("output directory " + dir.string() + " is not writable");
    }
    std::filesystem::remove(probe, ec);
}

}  // namespace detail

/// Per-epoch plot series of one run; returns the written path.
inline std::filesystem::path emit_plot_series(const RunArtifact& artifact, const std::filesystem::path& plots_dir) {
    const TraceFile t = read_trace_file(artifact.trace_path);
    std::ostringstream out;
    out << "epoch\teval_metric\teval_loss\tmin_loss\tmax_loss\tloss_gap\tlambda\tmean_weight\n";
    for (const auto& e : t.trace.epochs) {
        out << e.epoch << '\t' << fmt6(e.eval_metric) << '\t' << fmt6(e.eval_loss) << '\t'
            << fmt6(e.min_iteration_loss) << '\t' << fmt6(e.max_iteration_loss) << '\t'
            << fmt6(e.max_iteration_loss - e.min_iteration_loss) << '\t' << fmt6(e.lambda) << '\t'
            << fmt6(e.weight_mean) << '\n';
    }
    const auto path = plots_dir / (artifact.run_id + ".tsv");
    write_text_file(path, out.str());
    return path;
}

struct SummaryRow {
    std::string paradigm;
    ParadigmKind kind = ParadigmKind::ML;
    int runs = 0;
    int failed = 0;
    double metric_mean = 0.0, metric_se = 0.0;
    double loss_mean = 0.0, loss_se = 0.0;
    double gap_mean = 0.0, gap_se = 0.0;
    std::optional<double> epochs_to_threshold_mean;
    int threshold_reached = 0;
    int threshold_seeds = 0;  // seeds with a usable ML baseline
    int faster_than_ml = 0;
    int lower_gap_than_ml = 0;
};

struct RunRow {
    std::string run_id, paradigm;
    ParadigmKind kind = ParadigmKind::ML;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    double final_metric = 0.0, final_loss = 0.0, mean_gap = 0.0;
    std::optional<int> epochs_to_threshold;
    std::optional<double> weight_min, lambda;
};

struct Report {
    std::string task;
    std::vector<SummaryRow> summary;
    std::vector<RunRow> runs;
    std::vector<TraceFile> traces;  // same order as runs
};

/// Aggregates runs per paradigm from their trace files. Failed runs are
/// listed but excluded from aggregates. Epochs-to-threshold uses the final
/// eval loss of the same-seed run of the first ML paradigm as threshold.
inline Report compare_report(const std::vector<RunArtifact>& artifacts) {
    detail::require(!artifacts.empty(), "compare_report: no runs");
    Report rep;
    for (const auto& a : artifacts) rep.traces.push_back(read_trace_file(a.trace_path));
    rep.task = rep.traces.front().task;

    std::optional<std::string> baseline;
    for (const auto& t : rep.traces)
        if (t.kind == ParadigmKind::ML) {
            baseline = t.paradigm;
            break;
        }
    std::map<std::uint64_t, const TraceFile*> ml_by_seed;
    if (baseline)
        for (const auto& t : rep.traces)
            if (t.paradigm == *baseline && t.ok) ml_by_seed[t.seed] = &t;

    std::vector<std::string> order;
    for (const auto& t : rep.traces)
        if (std::find(order.begin(), order.end(), t.paradigm) == order.end()) order.push_back(t.paradigm);

    for (const auto& t : rep.traces) {
        RunRow r;
        r.run_id = t.run;
        r.paradigm = t.paradigm;
        r.kind = t.kind;
        r.seed = t.seed;
        r.ok = t.ok;
        r.error = t.error;
        if (t.ok) {
            r.final_metric = t.trace.epochs.back().eval_metric;
            r.final_loss = t.trace.epochs.back().eval_loss;
            r.mean_gap = detail::mean_gap(t.trace);
            if (const auto it = ml_by_seed.find(t.seed); it != ml_by_seed.end())
                r.epochs_to_threshold =
                    epochs_to_threshold(t.trace, it->second->trace.epochs.back().eval_loss);
            r.weight_min = t.final_value("weight_min");
            r.lambda = t.final_value("lambda");
        }
        rep.runs.push_back(r);
    }

    for (const auto& name : order) {
        SummaryRow s;
        s.paradigm = name;
        std::vector<double> metric, loss, gap, ett;
        for (const auto& r : rep.runs) {
            if (r.paradigm != name) continue;
            s.kind = r.kind;
            ++s.runs;
            if (!r.ok) {
                ++s.failed;
                continue;
            }
            metric.push_back(r.final_metric);
            loss.push_back(r.final_loss);
            gap.push_back(r.mean_gap);
            const auto ml = ml_by_seed.find(r.seed);
            if (ml == ml_by_seed.end()) continue;
            ++s.threshold_seeds;
            if (r.epochs_to_threshold) {
                ++s.threshold_reached;
                ett.push_back(*r.epochs_to_threshold);
            }
            const TrainTrace& mt = ml->second->trace;
            const auto ml_ett = epochs_to_threshold(mt, mt.epochs.back().eval_loss);
            if (r.epochs_to_threshold && ml_ett && *r.epochs_to_threshold < *ml_ett) ++s.faster_than_ml;
            if (r.mean_gap < detail::mean_gap(mt)) ++s.lower_gap_than_ml;
        }
        s.metric_mean = detail::mean_of(metric);
        s.metric_se = detail::stderr_of(metric);
        s.loss_mean = detail::mean_of(loss);
        s.loss_se = detail::stderr_of(loss);
        s.gap_mean = detail::mean_of(gap);
        s.gap_se = detail::stderr_of(gap);
        if (!ett.empty()) s.epochs_to_threshold_mean = detail::mean_of(ett);
        rep.summary.push_back(s);
    }
    return rep;
}

inline std::string format_summary(const Report& rep) {
    std::ostringstream out;
    out << "paradigm\tkind\truns\tfailed\tmetric_mean\tmetric_se\tloss_mean\tloss_se\tgap_mean\tgap_se\t"
           "epochs_to_threshold_mean\tthreshold_reached\tfaster_than_ml\tlower_gap_than_ml\n";
    for (const auto& s : rep.summary) {
        out << s.paradigm << '\t' << to_string(s.kind) << '\t' << s.runs << '\t' << s.failed << '\t'
            << fmt6(s.metric_mean) << '\t' << fmt6(s.metric_se) << '\t' << fmt6(s.loss_mean) << '\t'
            << fmt6(s.loss_se) << '\t' << fmt6(s.gap_mean) << '\t' << fmt6(s.gap_se) << '\t'
            << (s.epochs_to_threshold_mean ? fmt6(*s.epochs_to_threshold_mean) : "NA") << '\t'
            << s.threshold_reached << '/' << s.threshold_seeds << '\t' << s.faster_than_ml << '/'
            << s.threshold_seeds << '\t' << s.lower_gap_than_ml << '/' << s.threshold_seeds << '\n';
    }
    return out.str();
}

inline std::string format_runs(const Report& rep) {
    std::ostringstream out;
    out << "run\tparadigm\tkind\tseed\tstatus\tfinal_metric\tfinal_loss\tmean_gap\tepochs_to_threshold\t"
           "weight_min\tlambda\terror\n";
    for (const auto& r : rep.runs) {
        out << r.run_id << '\t' << r.paradigm << '\t' << to_string(r.kind) << '\t' << r.seed << '\t'
            << (r.ok ? "ok" : "failed") << '\t';
        if (r.ok) {
            out << fmt6(r.final_metric) << '\t' << fmt6(r.final_loss) << '\t' << fmt6(r.mean_gap) << '\t'
                << (r.epochs_to_threshold ? std::to_string(*r.epochs_to_threshold) : "NA") << '\t'
                << (r.weight_min ? fmt6(*r.weight_min) : "NA") << '\t' << (r.lambda ? fmt6(*r.lambda) : "NA")
                << "\t-\n";
        } else {
            out << "NA\tNA\tNA\tNA\tNA\tNA\t" << r.error << '\n';
        }
    }
    return out.str();
}

/// Navgrid only: mean per-round success and first-error shares per paradigm.
inline std::string format_breakdown(const Report& rep) {
    std::vector<std::string> keys;
    for (int r = kMinRound; r <= kMaxRound; ++r) keys.push_back("success_round" + std::to_string(r));
    for (const char* k : {"none", "in", "cross", "others"}) keys.push_back(std::string("first_error_") + k);
    std::ostringstream out;
    out << "paradigm";
    for (const auto& k : keys) out << '\t' << k;
    out << '\n';
    for (const auto& s : rep.summary) {
        out << s.paradigm;
        for (const auto& k : keys) {
            std::vector<double> v;
            for (const auto& t : rep.traces)
                if (t.paradigm == s.paradigm && t.ok)
                    if (const auto x = t.final_value(k)) v.push_back(*x);
            out << '\t' << (v.empty() ? "NA" : fmt6(detail::mean_of(v)));
        }
        out << '\n';
    }
    return out.str();
}

/// Rebuilds every table (and plot series) of an experiment directory from
/// its manifest and trace files.
inline Report write_report(const std::filesystem::path& dir) {
    const std::string manifest = read_text_file(dir / "manifest.tsv");
    std::vector<RunArtifact> artifacts;
    std::istringstream in(manifest);
    std::string line;
    if (!std::getline(in, line) || line != "run") throw IoError("parse error: bad manifest header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto path = dir / "runs" / (line + ".trace");
        const TraceFile t = read_trace_file(path);
        artifacts.push_back(detail::artifact_of(t, path));
    }
    Report rep = compare_report(artifacts);
    for (const auto& a : artifacts)
        if (a.ok) emit_plot_series(a, dir / "plots");
    write_text_file(dir / "summary.tsv", format_summary(rep));
    write_text_file(dir / "runs.tsv", format_runs(rep));
    if (rep.task == to_string(TaskKind::NavGrid)) write_text_file(dir / "breakdown.tsv", format_breakdown(rep));
    return rep;
}

/// Runs every (paradigm x seed) cell, seed-major. A failing cell is
/// recorded with its error and does not stop its siblings.
inline std::vector<RunArtifact> run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {}) {
    cfg.validate();
    const std::filesystem::path dir = resolve_output(options.output.value_or(cfg.output));
    detail::probe_writable(dir);
    if (!options.config_text.empty()) write_text_file(dir / "config.ini", options.config_text);

    std::vector<RunArtifact> artifacts;
    std::string manifest = "run\n";
    for (const std::uint64_t seed : cfg.seeds) {
        std::optional<detail::SeedData> data;
        std::string data_error;
        try {
            data = detail::build_seed_data(cfg, seed);
        } catch (const std::exception& e) {
            data_error = std::string("data generation failed: ") + e.what();
        }
        for (const auto& entry : cfg.paradigms) {
            const std::string id = run_id(entry.name, seed);
            TraceFile t;
            try {
                if (!data) throw std::runtime_error(data_error);
                if (options.before_run) options.before_run(id);
                t = detail::run_cell(cfg, entry, seed, *data);
            } catch (const std::exception& e) {
                t = TraceFile{};
                t.ok = false;
                t.error = e.what();
            }
            t.run = id;
            t.task = to_string(cfg.task);
            t.paradigm = entry.name;
            t.kind = entry.paradigm.kind;
            t.seed = seed;
            const auto path = dir / "runs" / (id + ".trace");
            write_trace_file(path, t);
            artifacts.push_back(detail::artifact_of(t, path));
            manifest += id + "\n";
            if (options.log)
                *options.log << id << ": "
                             << (t.ok ? "ok, final metric " + fmt6(t.trace.epochs.back().eval_metric)
                                      : "FAILED (" + t.error + ")")
                             << std::endl;
        }
    }
    write_text_file(dir / "manifest.tsv", manifest);
    write_report(dir);
    return artifacts;
}

inline bool all_ok(const std::vector<RunArtifact>& artifacts) {
    for (const auto& a : artifacts)
        if (!a.ok) return false;
    return true;
}

}  // namespace spcl::harness
