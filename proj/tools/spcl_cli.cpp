// spcl: experiment runner and generators.
//
//   spcl run <config.ini> [--output DIR]
//   spcl report <experiment-dir>
//   spcl gen-world --rooms-x 3 --rooms-y 3 --room-size 3 --door-density 0.3 --seed 1 --out world.txt
//   spcl gen-data synthetic --per-round 100 --seed 1 --out synth.txt
//   spcl gen-data navgrid --world world.txt --per-round 40 --seed 1 --out nav.txt
//
// Relative output paths resolve against $SPCL_OUTPUT_ROOT when it is set.

#include <cstdint>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "spcl/spcl.hpp"

namespace {

using spcl::harness::resolve_output;

int cmd_run(const std::string& config_path, const std::string& output) {
    const std::string text = spcl::read_text_file(config_path);
    const auto cfg = spcl::harness::parse_experiment_config(text);
    spcl::harness::RunOptions opts;
    if (!output.empty()) opts.output = output;
    opts.config_text = text;
    opts.log = &std::cerr;
    const auto artifacts = spcl::harness::run_experiment(cfg, opts);
    const auto dir = resolve_output(opts.output.value_or(cfg.output));
    std::cout << spcl::read_text_file(dir / "summary.tsv");
    std::cerr << "wrote " << dir.string() << '\n';
    return spcl::harness::all_ok(artifacts) ? 0 : 1;
}

int cmd_report(const std::string& dir_arg) {
    const auto dir = resolve_output(dir_arg);
    const auto rep = spcl::harness::write_report(dir);
    std::cout << spcl::harness::format_summary(rep);
    for (const auto& r : rep.runs)
        if (!r.ok) return 1;
    return 0;
}

void write_output(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    spcl::write_text_file(resolve_output(out), text);
}

int cmd_gen_world(int rx, int ry, int size, double density, std::uint64_t seed, const std::string& out) {
    const auto world = spcl::generate_room_grid(rx, ry, size, density, seed);
    std::ostringstream s;
    spcl::write_world(s, world);
    write_output(out, s.str());
    return 0;
}

int cmd_gen_data(const std::string& task, const std::string& world_path, int per_round, int max_round,
                 std::uint64_t seed, const std::string& out) {
    std::ostringstream s;
    if (task == "synthetic") {
        spcl::write_synthetic_dataset(s, spcl::generate_synthetic_dataset(per_round, seed));
    } else if (task == "navgrid") {
        if (world_path.empty()) throw spcl::DomainError("gen-data navgrid needs --world");
        std::istringstream in(spcl::read_text_file(world_path));
        const auto world = spcl::read_world(in);
        std::map<int, int> counts;
        for (int r = spcl::kMinRound; r <= max_round; ++r) counts[r] = per_round;
        spcl::write_nav_dataset(s, spcl::generate_nav_dataset(world, counts, seed));
    } else {
        throw spcl::DomainError("unknown task '" + task + "' (synthetic | navgrid)");
    }
    write_output(out, s.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-paced curriculum learning experiments"};
    app.require_subcommand(1);

    std::string config_path, output;
    auto* run = app.add_subcommand("run", "Run every (paradigm x seed) cell of a config");
    run->add_option("config", config_path, "Experiment config (INI)")->required();
    run->add_option("--output", output, "Override the config's output directory");

    std::string report_dir;
    auto* report = app.add_subcommand("report", "Rebuild tables from an experiment directory");
    report->add_option("dir", report_dir, "Experiment directory")->required();

    int rx = 3, ry = 3, size = 3;
    double density = 0.3;
    std::uint64_t seed = 1;
    std::string out;
    auto* gen_world = app.add_subcommand("gen-world", "Generate a room-grid world");
    gen_world->add_option("--rooms-x", rx)->check(CLI::PositiveNumber);
    gen_world->add_option("--rooms-y", ry)->check(CLI::PositiveNumber);
    gen_world->add_option("--room-size", size)->check(CLI::PositiveNumber);
    gen_world->add_option("--door-density", density);
    gen_world->add_option("--seed", seed);
    gen_world->add_option("--out", out, "Output file ('-' or empty: stdout)");

    std::string task, world_path;
    int per_round = 40;
    int max_round = spcl::kMaxRound;
    auto* gen_data = app.add_subcommand("gen-data", "Generate a stratified dataset");
    gen_data->add_option("task", task, "synthetic | navgrid")->required();
    gen_data->add_option("--world", world_path, "World file (navgrid)");
    gen_data->add_option("--per-round", per_round)->check(CLI::PositiveNumber);
    gen_data->add_option("--max-round", max_round, "Highest navgrid round to draw (small worlds)")
        ->check(CLI::Range(spcl::kMinRound, spcl::kMaxRound));
    gen_data->add_option("--seed", seed);
    gen_data->add_option("--out", out, "Output file ('-' or empty: stdout)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(config_path, output);
        if (*report) return cmd_report(report_dir);
        if (*gen_world) return cmd_gen_world(rx, ry, size, density, seed, out);
        if (*gen_data) return cmd_gen_data(task, world_path, per_round, max_round, seed, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
