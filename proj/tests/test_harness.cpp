#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "spcl/harness/experiment.hpp"

using namespace spcl;
using namespace spcl::harness;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"(
[experiment]
name = small
task = synthetic
seeds = 1,2,3
output = small

[train]
epochs = 6
iterations_per_epoch = 5
batch_size = 8
learning_rate = 0.02

[task.synthetic]
train_per_round = 8
eval_per_round = 10

[paradigm ml]
kind = ML

[paradigm spcl]
kind = SPCL
scheme = linear
w0 = 0
mu = 1
c_fraction = 0.95
)";

class Scratch : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() /
               ("spcl-harness-" + std::to_string(::getpid()) + "-" + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::vector<RunArtifact> run(const ExperimentConfig& cfg, const fs::path& sub, RunOptions opts = {}) {
        opts.output = dir_ / sub;
        return run_experiment(cfg, opts);
    }

    fs::path dir_;
};

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, '\t')) out.push_back(cell);
    return out;
}

std::vector<std::vector<std::string>> table(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(split_tabs(line));
    return rows;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_se(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

std::string g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

TEST(Config, ParsesShippedDefault) {
    const auto cfg = parse_experiment_config(read_text_file(fs::path(SPCL_CONFIG_DIR) / "default.ini"));
    EXPECT_EQ(cfg.task, TaskKind::Synthetic);
    EXPECT_EQ(cfg.seeds.size(), 10u);
    EXPECT_EQ(cfg.train.epochs, 40);
    EXPECT_EQ(cfg.train.iterations_per_epoch, 50);
    EXPECT_EQ(cfg.train.batch_size, 32);
    ASSERT_EQ(cfg.paradigms.size(), 5u);
    EXPECT_EQ(cfg.paradigms[0].paradigm.kind, ParadigmKind::ML);
    EXPECT_EQ(cfg.paradigms[1].paradigm.kind, ParadigmKind::SPCL);
    EXPECT_EQ(cfg.paradigms[1].paradigm.spcl->scheme, Scheme::Binary);
    const auto nav = parse_experiment_config(read_text_file(fs::path(SPCL_CONFIG_DIR) / "navgrid.ini"));
    EXPECT_EQ(nav.task, TaskKind::NavGrid);
}

TEST(Config, ParsesKindSpecificKeys) {
    const auto cfg = parse_experiment_config(R"(
[experiment]
task = navgrid
seeds = 4, 9
[task.navgrid]
rooms_x = 2
hidden_dim = 0
[paradigm r]
kind = RandomOrderCL
order = 2,1,3,5,4
stage_epochs = 3
[paradigm s]
kind = SPCL
scheme = binary
pgd_step_size = 0.5
)");
    EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{4, 9}));
    EXPECT_EQ(cfg.navgrid.rooms_x, 2);
    EXPECT_EQ(cfg.navgrid.hidden_dim, 0);
    EXPECT_EQ(cfg.paradigms[0].paradigm.stages->order, (RoundOrder{2, 1, 3, 5, 4}));
    EXPECT_EQ(cfg.paradigms[0].paradigm.stages->stage_epochs, 3);
    EXPECT_EQ(cfg.paradigms[1].paradigm.spcl->pgd.step_size, 0.5);
}

TEST(Config, Rejects) {
    const std::string head = "[experiment]\ntask = synthetic\nseeds = 1\n";
    const std::string ml = "[paradigm ml]\nkind = ML\n";
    auto rejects = [](const std::string& text) {
        EXPECT_THROW(parse_experiment_config(text), DomainError) << text;
    };
    rejects("[experiment]\ntask = synthetic\nseeds =\n" + ml);
    rejects("[experiment]\ntask = synthetic\nseeds = 1,1\n" + ml);
    rejects("[experiment]\ntask = maze\nseeds = 1\n" + ml);
    rejects(ml);
    rejects(head);
    rejects(head + "[paradigm ml]\nkind = Curriculum\n");
    rejects(head + ml + "[paradigm ml2]\nkind = ML\nmu = 2\n");
    rejects(head + ml + "[paradigm s]\nkind = SPCL\nc_fraction = 0.5\n");
    rejects(head + ml + "[paradigm s]\nkind = SPCL\nscheme = cubic\n");
    rejects(head + ml + "[train]\nepochs = many\n");
    rejects(head + ml + "[train]\nepochs = 0\n");
    rejects(head + ml + "[train]\nepoch = 3\n");
    rejects(head + ml + "[tasks]\nx = 1\n");
    rejects(head + ml + "[task.synthetic]\nnoise = 1,2\n");
    rejects(head + ml + "[task.navgrid]\ndoor_density = 0\n");
    rejects(head + "[paradigm two words]\nkind = ML\n");
    rejects(head + ml + "[paradigm r]\nkind = RandomOrderCL\norder = 1,2,3,4,4\n");
    rejects("stray = 1\n" + head + ml);
}

TEST(Trace, RoundTripIsExact) {
    TraceFile t;
    t.run = "spcl-s3";
    t.task = "synthetic";
    t.paradigm = "spcl";
    t.kind = ParadigmKind::SPCL;
    t.seed = 3;
    t.finals = {{"eval_loss", 0.1 + 0.2}, {"lambda", 11.0}};
    t.trace.warnings = {"epoch 1: slow"};
    EpochRecord e;
    e.epoch = 1;
    e.min_iteration_loss = 1.0 / 3.0;
    e.max_iteration_loss = 2.5;
    e.eval_loss = 0.7;
    e.eval_metric = 0.25;
    e.weight_mean = 0.9;
    e.weight_min = 0.1;
    e.lambda = 5.0;
    e.subproblem_warning = true;
    t.trace.epochs = {e};
    const auto back = parse_trace(format_trace(t));
    EXPECT_EQ(format_trace(back), format_trace(t));
    EXPECT_EQ(back.trace.epochs[0].min_iteration_loss, 1.0 / 3.0);
    EXPECT_EQ(*back.final_value("eval_loss"), 0.1 + 0.2);

    TraceFile failed;
    failed.ok = false;
    failed.error = "boom\nsecond line";
    const auto f = parse_trace(format_trace(failed));
    EXPECT_FALSE(f.ok);
    EXPECT_EQ(f.error, "boom second line");
    EXPECT_THROW(parse_trace("#spcl-trace v0\n"), IoError);
    EXPECT_THROW(parse_trace(std::string(kTraceHeader) + "\nepochs\t2\n" + kEpochColumns + "\n"), IoError);
}

TEST_F(Scratch, MatrixWritesOneTracePerCellAndOneSummary) {
    const auto cfg = parse_experiment_config(kSmallConfig);
    const auto artifacts = run(cfg, "m");
    ASSERT_EQ(artifacts.size(), 6u);
    std::set<std::string> ids;
    for (const auto& a : artifacts) {
        EXPECT_TRUE(a.ok) << a.error;
        EXPECT_TRUE(fs::exists(a.trace_path));
        EXPECT_TRUE(fs::exists(dir_ / "m" / "plots" / (a.run_id + ".tsv")));
        ids.insert(a.run_id);
    }
    EXPECT_EQ(ids.size(), 6u);
    EXPECT_TRUE(ids.count("spcl-s2"));
    int traces = 0;
    for (const auto& entry : fs::directory_iterator(dir_ / "m" / "runs")) traces += entry.path().extension() == ".trace";
    EXPECT_EQ(traces, 6);
    const auto summary = table(read_text_file(dir_ / "m" / "summary.tsv"));
    ASSERT_EQ(summary.size(), 3u);
    EXPECT_EQ(summary[1][0], "ml");
    EXPECT_EQ(summary[2][0], "spcl");
    EXPECT_EQ(summary[2][2], "3");
    EXPECT_FALSE(fs::exists(dir_ / "m" / ".write-probe"));
}

TEST_F(Scratch, RerunIsByteIdentical) {
    const auto cfg = parse_experiment_config(kSmallConfig);
    run(cfg, "a");
    run(cfg, "b");
    for (const char* f : {"summary.tsv", "runs.tsv", "manifest.tsv", "runs/spcl-s1.trace", "plots/ml-s3.tsv"})
        EXPECT_EQ(read_text_file(dir_ / "a" / f), read_text_file(dir_ / "b" / f)) << f;
    const std::string first = read_text_file(dir_ / "a" / "summary.tsv");
    run(cfg, "a");
    EXPECT_EQ(read_text_file(dir_ / "a" / "summary.tsv"), first);
}

TEST_F(Scratch, SummaryRecomputesFromTraceFiles) {
    const auto cfg = parse_experiment_config(kSmallConfig);
    const auto artifacts = run(cfg, "r");
    const auto summary = table(read_text_file(dir_ / "r" / "summary.tsv"));
    const auto& header = summary[0];
    auto col = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    for (std::size_t row = 1; row < summary.size(); ++row) {
        std::vector<double> metric, loss, gap;
        for (const auto& a : artifacts) {
            if (a.paradigm != summary[row][0]) continue;
            const auto t = read_trace_file(a.trace_path);
            metric.push_back(t.trace.epochs.back().eval_metric);
            loss.push_back(t.trace.epochs.back().eval_loss);
            double g = 0.0;
            for (const auto& e : t.trace.epochs) g += e.max_iteration_loss - e.min_iteration_loss;
            gap.push_back(g / static_cast<double>(t.trace.epochs.size()));
            EXPECT_EQ(*t.final_value("eval_loss"), t.trace.epochs.back().eval_loss);
        }
        ASSERT_EQ(metric.size(), 3u);
        EXPECT_EQ(summary[row][col("metric_mean")], g6(mean(metric)));
        EXPECT_EQ(summary[row][col("metric_se")], g6(sample_se(metric)));
        EXPECT_EQ(summary[row][col("loss_mean")], g6(mean(loss)));
        EXPECT_EQ(summary[row][col("loss_se")], g6(sample_se(loss)));
        EXPECT_EQ(summary[row][col("gap_mean")], g6(mean(gap)));
        EXPECT_EQ(summary[row][col("gap_se")], g6(sample_se(gap)));
    }
    // The ML row reaches its own final loss by definition.
    EXPECT_EQ(summary[1][col("threshold_reached")], "3/3");
    EXPECT_EQ(summary[1][col("faster_than_ml")], "0/3");

    fs::remove(dir_ / "r" / "summary.tsv");
    const auto rebuilt = write_report(dir_ / "r");
    EXPECT_EQ(format_summary(rebuilt), read_text_file(dir_ / "r" / "summary.tsv"));
}

TEST_F(Scratch, SingleSeedHasZeroStandardError) {
    auto cfg = parse_experiment_config(kSmallConfig);
    cfg.seeds = {5};
    const auto rep = compare_report(run(cfg, "one"));
    for (const auto& s : rep.summary) {
        EXPECT_EQ(s.runs, 1);
        EXPECT_EQ(s.metric_se, 0.0);
        EXPECT_EQ(s.loss_se, 0.0);
        EXPECT_EQ(s.gap_se, 0.0);
    }
}

TEST_F(Scratch, IdenticalRunsHaveZeroVariance) {
    TraceFile t;
    t.task = "synthetic";
    t.paradigm = "ml";
    EpochRecord e;
    e.epoch = 1;
    e.min_iteration_loss = 0.2;
    e.max_iteration_loss = 0.6;
    e.eval_loss = 0.4;
    e.eval_metric = 0.75;
    t.trace.epochs = {e, e};
    std::vector<RunArtifact> artifacts;
    for (std::uint64_t seed : {1, 2, 3, 4}) {
        t.seed = seed;
        t.run = run_id("ml", seed);
        const auto path = dir_ / (t.run + ".trace");
        write_trace_file(path, t);
        RunArtifact a;
        a.run_id = t.run;
        a.trace_path = path;
        artifacts.push_back(a);
    }
    const auto rep = compare_report(artifacts);
    ASSERT_EQ(rep.summary.size(), 1u);
    EXPECT_EQ(rep.summary[0].metric_mean, 0.75);
    EXPECT_EQ(rep.summary[0].metric_se, 0.0);
    EXPECT_EQ(rep.summary[0].loss_se, 0.0);
    EXPECT_NEAR(rep.summary[0].gap_mean, 0.4, 1e-15);
    EXPECT_EQ(rep.summary[0].gap_se, 0.0);
}

TEST_F(Scratch, PlotSeries) {
    auto cfg = parse_experiment_config(kSmallConfig);
    cfg.seeds = {2};
    const auto artifacts = run(cfg, "p");
    for (const auto& a : artifacts) {
        const auto rows = table(read_text_file(emit_plot_series(a, dir_ / "replot")));
        ASSERT_EQ(rows.size(), 7u);  // header + 6 epochs
        EXPECT_EQ(rows[0], (std::vector<std::string>{"epoch", "eval_metric", "eval_loss", "min_loss", "max_loss",
                                                     "loss_gap", "lambda", "mean_weight"}));
        const auto t = read_trace_file(a.trace_path);
        double prev_lambda = 0.0;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& e = t.trace.epochs[r - 1];
            EXPECT_EQ(rows[r][5], g6(e.max_iteration_loss - e.min_iteration_loss));
            EXPECT_NEAR(std::stod(rows[r][5]), std::stod(rows[r][4]) - std::stod(rows[r][3]),
                        1e-5 * std::max(1.0, std::stod(rows[r][4])));
            if (a.kind == ParadigmKind::SPCL) {
                const double lambda = std::stod(rows[r][6]);
                EXPECT_GE(lambda, prev_lambda);
                prev_lambda = lambda;
            } else {
                EXPECT_EQ(rows[r][6], "nan");
            }
        }
    }
    RunArtifact missing;
    missing.run_id = "ghost";
    missing.trace_path = dir_ / "nope.trace";
    EXPECT_THROW(emit_plot_series(missing, dir_), IoError);
}

TEST_F(Scratch, UnwritableOutputFailsBeforeTraining) {
    write_text_file(dir_ / "blocker", "a file, not a directory\n");
    const auto cfg = parse_experiment_config(kSmallConfig);
    int started = 0;
    RunOptions opts;
    opts.output = dir_ / "blocker" / "out";
    opts.before_run = [&](const std::string&) { ++started; };
    EXPECT_THROW(run_experiment(cfg, opts), IoError);
    EXPECT_EQ(started, 0);
}

TEST_F(Scratch, FailingCellIsIsolatedAndExcluded) {
    const auto cfg = parse_experiment_config(kSmallConfig);
    RunOptions opts;
    opts.before_run = [](const std::string& id) {
        if (id == "spcl-s2") throw std::runtime_error("injected failure");
    };
    const auto artifacts = run(cfg, "f", opts);
    ASSERT_EQ(artifacts.size(), 6u);
    EXPECT_FALSE(all_ok(artifacts));
    for (const auto& a : artifacts) EXPECT_EQ(a.ok, a.run_id != "spcl-s2") << a.run_id;
    const auto failed = read_trace_file(dir_ / "f" / "runs" / "spcl-s2.trace");
    EXPECT_FALSE(failed.ok);
    EXPECT_EQ(failed.error, "injected failure");
    EXPECT_FALSE(fs::exists(dir_ / "f" / "plots" / "spcl-s2.tsv"));

    const auto rep = write_report(dir_ / "f");
    const auto& spcl_row = rep.summary[1];
    EXPECT_EQ(spcl_row.runs, 3);
    EXPECT_EQ(spcl_row.failed, 1);
    std::vector<double> ok_metrics;
    for (const auto& r : rep.runs)
        if (r.paradigm == "spcl" && r.ok) ok_metrics.push_back(r.final_metric);
    ASSERT_EQ(ok_metrics.size(), 2u);
    EXPECT_DOUBLE_EQ(spcl_row.metric_mean, mean(ok_metrics));
    EXPECT_NE(read_text_file(dir_ / "f" / "runs.tsv").find("spcl-s2\tspcl\tSPCL\t2\tfailed"), std::string::npos);
}

TEST_F(Scratch, OutputRootEnvironmentVariable) {
    const auto cfg = parse_experiment_config(kSmallConfig);
    ::setenv(kOutputRootEnv, dir_.c_str(), 1);
    EXPECT_EQ(resolve_output("x/y"), dir_ / "x" / "y");
    EXPECT_EQ(resolve_output("/abs/path"), fs::path("/abs/path"));
    auto one = cfg;
    one.seeds = {1};
    run_experiment(one);
    ::unsetenv(kOutputRootEnv);
    EXPECT_TRUE(fs::exists(dir_ / "small" / "summary.tsv"));
    EXPECT_EQ(resolve_output("x/y"), fs::path("x/y"));
}

TEST_F(Scratch, NavgridRunWritesBreakdown) {
    const auto cfg = parse_experiment_config(R"(
[experiment]
task = navgrid
seeds = 1
[train]
epochs = 2
iterations_per_epoch = 3
batch_size = 4
learning_rate = 0.5
[task.navgrid]
train_per_round = 3
eval_per_round = 3
hidden_dim = 0
[paradigm ml]
kind = ML
[paradigm naive]
kind = NaiveCL
)");
    const auto artifacts = run(cfg, "nav");
    for (const auto& a : artifacts) EXPECT_TRUE(a.ok) << a.error;
    const auto rows = table(read_text_file(dir_ / "nav" / "breakdown.tsv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0][1], "success_round1");
    const auto t = read_trace_file(artifacts[0].trace_path);
    double share = 0.0;
    for (const char* k : {"none", "in", "cross", "others"}) share += *t.final_value(std::string("first_error_") + k);
    EXPECT_NEAR(share, 1.0, 1e-12);
    EXPECT_LE(*t.final_value("first_error_none"), t.trace.epochs.back().eval_metric + 1e-12);
}
