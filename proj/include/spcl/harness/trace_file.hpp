#pragma once

// Per-run trace files. Header, tab-separated metadata lines, then the epoch
// table. Numbers are written with 17 significant digits so every derived
// table can be recomputed exactly from the file.
//
//   #spcl-trace v1
//   run        <id>
//   task       synthetic | navgrid
//   paradigm   <config name>
//   kind       ML | NaiveCL | SPCL | ReverseCL | RandomOrderCL
//   seed       <u64>
//   status     ok | failed
//   error      <message>                 (failed runs only)
//   final      <metric> <value>          (zero or more)
//   warning    <text>                    (zero or more)
//   epochs     <count>
//   epoch  min_iteration_loss  max_iteration_loss  eval_loss  eval_metric  weight_mean  weight_min  lambda  subproblem_warning
//   <count rows>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spcl/errors.hpp"
#include "spcl/tasks/io.hpp"
#include "spcl/trainer.hpp"

namespace spcl::harness {

inline constexpr const char* kTraceHeader = "#spcl-trace v1";
inline constexpr const char* kEpochColumns =
    "epoch\tmin_iteration_loss\tmax_iteration_loss\teval_loss\teval_metric\tweight_mean\tweight_min\tlambda\t"
    "subproblem_warning";

struct TraceFile {
    std::string run;
    std::string task;
    std::string paradigm;
    ParadigmKind kind = ParadigmKind::ML;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    std::vector<std::pair<std::string, double>> finals;
    TrainTrace trace;

    std::optional<double> final_value(const std::string& key) const {
        for (const auto& [k, v] : finals)
            if (k == key) return v;
        return std::nullopt;
    }
};

namespace detail {

inline std::string one_line(std::string s) {
    for (auto& c : s)
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    return s;
}

}  // namespace detail

inline std::string format_trace(const TraceFile& t) {
    using spcl::detail::exact;
    std::ostringstream out;
    out << kTraceHeader << '\n';
    out << "run\t" << t.run << '\n';
    out << "task\t" << t.task << '\n';
    out << "paradigm\t" << t.paradigm << '\n';
    out << "kind\t" << to_string(t.kind) << '\n';
    out << "seed\t" << t.seed << '\n';
    out << "status\t" << (t.ok ? "ok" : "failed") << '\n';
    if (!t.ok) out << "error\t" << detail::one_line(t.error) << '\n';
    for (const auto& [k, v] : t.finals) out << "final\t" << k << '\t' << exact(v) << '\n';
    for (const auto& w : t.trace.warnings) out << "warning\t" << detail::one_line(w) << '\n';
    out << "epochs\t" << t.trace.epochs.size() << '\n';
    out << kEpochColumns << '\n';
    for (const auto& e : t.trace.epochs) {
        out << e.epoch << '\t' << exact(e.min_iteration_loss) << '\t' << exact(e.max_iteration_loss) << '\t'
            << exact(e.eval_loss) << '\t' << exact(e.eval_metric) << '\t' << exact(e.weight_mean) << '\t'
            << exact(e.weight_min) << '\t' << exact(e.lambda) << '\t' << (e.subproblem_warning ? 1 : 0)
            << '\n';
    }
    return out.str();
}

inline TraceFile parse_trace(const std::string& text) {
    using spcl::detail::parse_double;
    using spcl::detail::parse_long;
    using spcl::detail::split;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader)
        throw IoError("parse error: expected header '" + std::string(kTraceHeader) + "'");
    TraceFile t;
    long epochs = -1;
    while (epochs < 0 && std::getline(in, line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw IoError("parse error: bad trace line '" + line + "'");
        const std::string key = line.substr(0, tab);
        const std::string value = line.substr(tab + 1);
        if (key == "run") t.run = value;
        else if (key == "task") t.task = value;
        else if (key == "paradigm") t.paradigm = value;
        else if (key == "kind") {
            try {
                t.kind = paradigm_kind_from_string(value);
            } catch (const DomainError& e) {
                throw IoError(std::string("parse error: ") + e.what());
            }
        } else if (key == "seed") t.seed = spcl::detail::parse_seed(value);
        else if (key == "status") {
            if (value != "ok" && value != "failed") throw IoError("parse error: bad status '" + value + "'");
            t.ok = value == "ok";
        } else if (key == "error") t.error = value;
        else if (key == "final") {
            const auto parts = split(value, '\t');
            if (parts.size() != 2) throw IoError("parse error: bad final line '" + line + "'");
            t.finals.emplace_back(parts[0], parse_double(parts[1], parts[0]));
        } else if (key == "warning") t.trace.warnings.push_back(value);
        else if (key == "epochs") {
            epochs = parse_long(value, "epochs");
            if (epochs < 0) throw IoError("parse error: negative epoch count");
        } else throw IoError("parse error: unknown trace key '" + key + "'");
    }
    if (epochs < 0) throw IoError("parse error: trace has no epochs line");
    if (!std::getline(in, line) || line != kEpochColumns) throw IoError("parse error: bad epoch column header");
    for (long i = 0; i < epochs; ++i) {
        if (!std::getline(in, line)) throw IoError("parse error: truncated epoch table");
        const auto c = split(line, '\t');
        if (c.size() != 9) throw IoError("parse error: epoch row needs 9 columns");
        EpochRecord e;
        e.epoch = static_cast<int>(parse_long(c[0], "epoch"));
        e.min_iteration_loss = parse_double(c[1], "min_iteration_loss");
        e.max_iteration_loss = parse_double(c[2], "max_iteration_loss");
        e.eval_loss = parse_double(c[3], "eval_loss");
        e.eval_metric = parse_double(c[4], "eval_metric");
        e.weight_mean = parse_double(c[5], "weight_mean");
        e.weight_min = parse_double(c[6], "weight_min");
        e.lambda = parse_double(c[7], "lambda");
        e.subproblem_warning = parse_long(c[8], "subproblem_warning") != 0;
        t.trace.epochs.push_back(e);
    }
    return t;
}

inline void write_trace_file(const std::filesystem::path& path, const TraceFile& t) {
    write_text_file(path, format_trace(t));
}

inline TraceFile read_trace_file(const std::filesystem::path& path) {
    try {
        return parse_trace(read_text_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace spcl::harness
