#pragma once

// Experiment configuration. INI text, one section per concern:
//
//   [experiment]        name, task (synthetic | navgrid), seeds, output
//   [train]             epochs, iterations_per_epoch, batch_size, learning_rate
//   [task.synthetic]    train_per_round, eval_per_round, noise, flip
//   [task.navgrid]      rooms_x, rooms_y, room_size, door_density,
//                       train_per_round, eval_per_round, hidden_dim
//   [paradigm <name>]   kind plus kind-specific keys; one section per paradigm,
//                       run in file order
//
// Lists are comma separated. Comment lines start with ';' or '#'. Unknown
// sections and keys are rejected so typos do not silently fall back to
// defaults.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "spcl/errors.hpp"
#include "spcl/tasks/synthetic.hpp"
#include "spcl/trainer.hpp"

namespace spcl::harness {

enum class TaskKind { Synthetic, NavGrid };

inline const char* to_string(TaskKind t) { return t == TaskKind::Synthetic ? "synthetic" : "navgrid"; }

struct SyntheticTaskParams {
    int train_per_round = 100;
    int eval_per_round = 200;
    SyntheticParams data;
};

struct NavTaskParams {
    int rooms_x = 3;
    int rooms_y = 3;
    int room_size = 3;
    double door_density = 0.3;
    int train_per_round = 40;
    int eval_per_round = 40;
    int hidden_dim = 16;
};

struct ParadigmEntry {
    std::string name;
    Paradigm paradigm;
};

struct ExperimentConfig {
    std::string name = "experiment";
    TaskKind task = TaskKind::Synthetic;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path output = "out";
    TrainConfig train{40, 50, 32, 0.02, 0};
    SyntheticTaskParams synthetic;
    NavTaskParams navgrid;
    std::vector<ParadigmEntry> paradigms;

    void validate() const {
        detail::require(!paradigms.empty(), "config: at least one [paradigm <name>] section is required");
        detail::require(!seeds.empty(), "config: seeds must list at least one seed");
        std::set<std::uint64_t> unique_seeds(seeds.begin(), seeds.end());
        detail::require(unique_seeds.size() == seeds.size(), "config: duplicate seed");
        std::set<std::string> names;
        for (const auto& p : paradigms) {
            detail::require(names.insert(p.name).second, "config: duplicate paradigm name '" + p.name + "'");
            p.paradigm.validate();
        }
        TrainConfig t = train;
        t.validate();
        detail::require(train.epochs > 0, "config: epochs must be > 0");
        detail::require(synthetic.train_per_round >= 1 && synthetic.eval_per_round >= 1,
                        "config: synthetic per-round counts must be >= 1");
        detail::require(navgrid.rooms_x >= 1 && navgrid.rooms_y >= 1 && navgrid.room_size >= 1,
                        "config: navgrid dimensions must be >= 1");
        detail::require(navgrid.door_density > 0.0 && navgrid.door_density <= 1.0,
                        "config: door_density must lie in (0, 1]");
        detail::require(navgrid.train_per_round >= 1 && navgrid.eval_per_round >= 1,
                        "config: navgrid per-round counts must be >= 1");
        detail::require(navgrid.hidden_dim >= 0, "config: hidden_dim must be >= 0 (0 = logistic)");
    }
};

namespace detail {

using spcl::detail::require;

using Section = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long x = std::stol(v, &used);
        if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw DomainError("config: '" + key + "' expects an integer, got '" + v + "'");
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] != '-') {
            const auto x = std::stoull(v, &used);
            if (used == v.size()) return x;
        }
    } catch (const std::exception&) {
    }
    throw DomainError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw DomainError("config: '" + key + "' expects a number, got '" + v + "'");
}

/// Reads each known key that is present, then rejects leftovers.
class SectionReader {
public:
    SectionReader(std::string name, Section values) : name_(std::move(name)), values_(std::move(values)) {}

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string take(const std::string& key) {
        const auto it = values_.find(key);
        require(it != values_.end(), "config: [" + name_ + "] is missing '" + key + "'");
        std::string v = it->second;
        values_.erase(it);
        return v;
    }

    template <class T, class Parse>
    void maybe(const std::string& key, T& out, Parse parse) {
        if (has(key)) out = static_cast<T>(parse(key, take(key)));
    }

    void finish() const {
        if (!values_.empty())
            throw DomainError("config: unknown key '" + values_.begin()->first + "' in [" + name_ + "]");
    }

private:
    std::string name_;
    Section values_;
};

inline std::array<double, 5> five_numbers(const std::string& key, const std::string& v) {
    const auto items = split_list(v);
    require(items.size() == 5, "config: '" + key + "' expects 5 comma-separated numbers");
    std::array<double, 5> out{};
    for (std::size_t i = 0; i < 5; ++i) out[i] = to_double(key, items[i]);
    return out;
}

inline Paradigm parse_paradigm(SectionReader& r) {
    const ParadigmKind kind = paradigm_kind_from_string(r.take("kind"));
    Paradigm p;
    p.kind = kind;
    if (kind == ParadigmKind::SPCL) {
        SpclParams s;
        if (r.has("scheme")) s.scheme = scheme_from_string(r.take("scheme"));
        r.maybe("w0", s.w0, to_double);
        r.maybe("mu", s.mu, to_double);
        r.maybe("update_interval", s.update_interval, to_long);
        r.maybe("c_fraction", s.c_fraction, to_double);
        r.maybe("lambda0", s.lambda0, to_double);
        if (r.has("pgd_step_size")) s.pgd.step_size = to_double("pgd_step_size", r.take("pgd_step_size"));
        r.maybe("pgd_max_iterations", s.pgd.max_iterations, to_long);
        r.maybe("pgd_tolerance", s.pgd.tolerance, to_double);
        p.spcl = s;
    } else if (p.staged()) {
        StageParams st;
        r.maybe("stage_epochs", st.stage_epochs, to_long);
        if (r.has("order")) {
            const auto items = split_list(r.take("order"));
            require(items.size() == 5, "config: 'order' expects a permutation of 1..5");
            RoundOrder order{};
            for (std::size_t i = 0; i < 5; ++i) order[i] = static_cast<int>(to_long("order", items[i]));
            st.order = order;
        }
        p.stages = st;
    }
    return p;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw DomainError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }

    ExperimentConfig cfg;
    bool saw_experiment = false;
    for (const auto& [section_name, section] : tree) {
        detail::Section values;
        for (const auto& [key, value] : section) {
            if (!value.empty())
                throw DomainError("config: nested key '" + key + "' in [" + section_name + "]");
            values[key] = detail::trim(value.data());
        }
        if (section.empty() && !section.data().empty())
            throw DomainError("config: key '" + section_name + "' outside any section");
        detail::SectionReader r(section_name, values);

        if (section_name == "experiment") {
            saw_experiment = true;
            r.maybe("name", cfg.name, [](const std::string&, const std::string& v) { return v; });
            const std::string task = r.take("task");
            if (task == "synthetic") cfg.task = TaskKind::Synthetic;
            else if (task == "navgrid") cfg.task = TaskKind::NavGrid;
            else throw DomainError("config: unknown task '" + task + "' (synthetic | navgrid)");
            for (const auto& s : detail::split_list(r.take("seeds")))
                cfg.seeds.push_back(detail::to_u64("seeds", s));
            if (r.has("output")) cfg.output = r.take("output");
        } else if (section_name == "train") {
            r.maybe("epochs", cfg.train.epochs, detail::to_long);
            r.maybe("iterations_per_epoch", cfg.train.iterations_per_epoch, detail::to_long);
            r.maybe("batch_size", cfg.train.batch_size, detail::to_long);
            r.maybe("learning_rate", cfg.train.learning_rate, detail::to_double);
        } else if (section_name == "task.synthetic") {
            auto& s = cfg.synthetic;
            r.maybe("train_per_round", s.train_per_round, detail::to_long);
            r.maybe("eval_per_round", s.eval_per_round, detail::to_long);
            r.maybe("noise", s.data.noise, detail::five_numbers);
            r.maybe("flip", s.data.flip, detail::five_numbers);
        } else if (section_name == "task.navgrid") {
            auto& n = cfg.navgrid;
            r.maybe("rooms_x", n.rooms_x, detail::to_long);
            r.maybe("rooms_y", n.rooms_y, detail::to_long);
            r.maybe("room_size", n.room_size, detail::to_long);
            r.maybe("door_density", n.door_density, detail::to_double);
            r.maybe("train_per_round", n.train_per_round, detail::to_long);
            r.maybe("eval_per_round", n.eval_per_round, detail::to_long);
            r.maybe("hidden_dim", n.hidden_dim, detail::to_long);
        } else if (section_name.rfind("paradigm ", 0) == 0) {
            const std::string name = detail::trim(section_name.substr(9));
            detail::require(!name.empty() && name.find_first_of(" \t/\\") == std::string::npos,
                            "config: paradigm names must be single words");
            cfg.paradigms.push_back({name, detail::parse_paradigm(r)});
        } else {
            throw DomainError("config: unknown section [" + section_name + "]");
        }
        r.finish();
    }
    detail::require(saw_experiment, "config: missing [experiment] section");
    cfg.validate();
    return cfg;
}

}  // namespace spcl::harness
