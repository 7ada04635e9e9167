#pragma once

// Text formats. Each file starts with a versioned header line.
//
//   #spcl-world v1
//   rooms_x=<int> rooms_y=<int> room_size=<int>
//   types <room type name per room>
//   <rows lines of space-separated room ids>
//   doors <count>
//   <row>,<col> <row>,<col>           (one door per line)
//
//   #spcl-navdata v1 seed=<u64>
//   id=<int>\tround=<int>\tinstruction=<tok,tok,..>\tstart=<r>,<c>\tgoal=<r>,<c>\ttrajectory=<r>,<c>;<r>,<c>;..
//
//   #spcl-synthdata v1 seed=<u64>
//   id=<int>\tround=<int>\tx=<f,f,..>\ty=<f>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spcl/tasks/navigation.hpp"
#include "spcl/tasks/synthetic.hpp"

namespace spcl {

inline constexpr const char* kWorldHeader = "#spcl-world v1";
inline constexpr const char* kNavDataHeader = "#spcl-navdata v1";
inline constexpr const char* kSynthDataHeader = "#spcl-synthdata v1";

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

inline std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline long parse_long(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw IoError("parse error: bad integer '" + s + "' for " + what);
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw IoError("parse error: bad number '" + s + "' for " + what);
}

inline std::uint64_t parse_seed(const std::string& s) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw IoError("parse error: bad seed '" + s + "'");
}

inline Cell parse_cell(const std::string& s) {
    const auto parts = split(s, ',');
    if (parts.size() != 2) throw IoError("parse error: bad cell '" + s + "'");
    return {static_cast<int>(parse_long(parts[0], "cell row")),
            static_cast<int>(parse_long(parts[1], "cell col"))};
}

inline Token parse_token(const std::string& s) {
    try {
        return token_from_name(s);
    } catch (const DomainError&) {
        throw IoError("parse error: unknown token '" + s + "'");
    }
}

inline std::string cell_text(Cell c) { return std::to_string(c.row) + "," + std::to_string(c.col); }

inline std::map<std::string, std::string> parse_fields(const std::string& line) {
    std::map<std::string, std::string> fields;
    for (const auto& part : split(line, '\t')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw IoError("parse error: field without '=': " + part);
        fields[part.substr(0, eq)] = part.substr(eq + 1);
    }
    return fields;
}

inline const std::string& field(const std::map<std::string, std::string>& fields,
                                const std::string& key) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw IoError("parse error: missing field '" + key + "'");
    return it->second;
}

/// "<header> seed=<n>" -> n
inline std::uint64_t parse_header_seed(const std::string& line, const std::string& header) {
    const std::string prefix = header + std::string(" seed=");
    if (line.rfind(prefix, 0) != 0) throw IoError("parse error: expected header '" + header + "'");
    return parse_seed(line.substr(prefix.size()));
}

}  // namespace detail

inline void write_world(std::ostream& out, const RoomGrid& world) {
    out << kWorldHeader << '\n';
    out << "rooms_x=" << world.rooms_x() << " rooms_y=" << world.rooms_y()
        << " room_size=" << world.room_size() << '\n';
    out << "types";
    for (int t : world.room_types()) out << ' ' << kRoomTypeNames[static_cast<std::size_t>(t)];
    out << '\n';
    for (int r = 0; r < world.rows(); ++r) {
        for (int c = 0; c < world.cols(); ++c) out << (c ? " " : "") << world.room_of({r, c});
        out << '\n';
    }
    const auto doors = world.doors();
    out << "doors " << doors.size() << '\n';
    for (const Door& d : doors) out << detail::cell_text(d.a) << ' ' << detail::cell_text(d.b) << '\n';
}

inline RoomGrid read_world(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kWorldHeader)
        throw IoError("parse error: expected header '" + std::string(kWorldHeader) + "'");
    if (!std::getline(in, line)) throw IoError("parse error: missing world dimensions");
    std::map<std::string, long> dims;
    for (const auto& part : detail::split(line, ' ')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw IoError("parse error: bad dimension '" + part + "'");
        dims[part.substr(0, eq)] = detail::parse_long(part.substr(eq + 1), part.substr(0, eq));
    }
    for (const char* key : {"rooms_x", "rooms_y", "room_size"})
        if (!dims.count(key)) throw IoError(std::string("parse error: missing ") + key);
    const int rx = static_cast<int>(dims["rooms_x"]);
    const int ry = static_cast<int>(dims["rooms_y"]);
    const int size = static_cast<int>(dims["room_size"]);
    if (rx < 1 || ry < 1 || size < 1) throw IoError("parse error: world dimensions must be >= 1");

    if (!std::getline(in, line)) throw IoError("parse error: missing room types");
    auto type_parts = detail::split(line, ' ');
    if (type_parts.empty() || type_parts[0] != "types") throw IoError("parse error: expected 'types'");
    std::vector<int> types;
    for (std::size_t i = 1; i < type_parts.size(); ++i)
        types.push_back(detail::parse_token(type_parts[i]) - kFirstRoomToken);

    // The grid is implied by the dimensions; check it rather than trust it.
    for (int r = 0; r < ry * size; ++r) {
        if (!std::getline(in, line)) throw IoError("parse error: truncated grid");
        const auto ids = detail::split(line, ' ');
        if (static_cast<int>(ids.size()) != rx * size) throw IoError("parse error: bad grid row width");
        for (int c = 0; c < rx * size; ++c)
            if (detail::parse_long(ids[static_cast<std::size_t>(c)], "room id") !=
                (r / size) * rx + c / size)
                throw IoError("parse error: grid room id does not match the room layout");
    }
    if (!std::getline(in, line) || line.rfind("doors ", 0) != 0)
        throw IoError("parse error: expected 'doors <count>'");
    const long count = detail::parse_long(line.substr(6), "door count");
    std::vector<Door> doors;
    for (long i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw IoError("parse error: truncated door list");
        const auto cells = detail::split(line, ' ');
        if (cells.size() != 2) throw IoError("parse error: bad door line '" + line + "'");
        doors.push_back({detail::parse_cell(cells[0]), detail::parse_cell(cells[1])});
    }
    try {
        return RoomGrid(rx, ry, size, std::move(types), std::move(doors));
    } catch (const DomainError& e) {
        throw IoError(std::string("parse error: invalid world: ") + e.what());
    }
}

inline void write_nav_dataset(std::ostream& out, const StratifiedDataset<NavSample>& data) {
    out << kNavDataHeader << " seed=" << data.seed << '\n';
    for (const auto& s : data.samples) {
        out << "id=" << s.id << "\tround=" << s.round << "\tinstruction=";
        for (std::size_t i = 0; i < s.instruction.size(); ++i)
            out << (i ? "," : "") << token_name(s.instruction[i]);
        out << "\tstart=" << detail::cell_text(s.start) << "\tgoal=" << detail::cell_text(s.goal)
            << "\ttrajectory=";
        for (std::size_t i = 0; i < s.gt_trajectory.size(); ++i)
            out << (i ? ";" : "") << detail::cell_text(s.gt_trajectory[i]);
        out << '\n';
    }
}

inline StratifiedDataset<NavSample> read_nav_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("parse error: empty nav dataset");
    StratifiedDataset<NavSample> data;
    data.seed = detail::parse_header_seed(line, kNavDataHeader);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::parse_fields(line);
        NavSample s;
        s.id = static_cast<int>(detail::parse_long(detail::field(f, "id"), "id"));
        s.round = static_cast<int>(detail::parse_long(detail::field(f, "round"), "round"));
        if (s.round < kMinRound || s.round > kMaxRound) throw IoError("parse error: round out of range");
        for (const auto& t : detail::split(detail::field(f, "instruction"), ','))
            s.instruction.push_back(detail::parse_token(t));
        s.start = detail::parse_cell(detail::field(f, "start"));
        s.goal = detail::parse_cell(detail::field(f, "goal"));
        for (const auto& c : detail::split(detail::field(f, "trajectory"), ';'))
            s.gt_trajectory.push_back(detail::parse_cell(c));
        data.samples.push_back(std::move(s));
    }
    return data;
}

inline void write_synthetic_dataset(std::ostream& out, const StratifiedDataset<LabeledExample>& data) {
    out << kSynthDataHeader << " seed=" << data.seed << '\n';
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const auto& ex = data.samples[i];
        const double* y = std::get_if<double>(&ex.y);
        detail::require(y != nullptr, "synthetic dataset: regression targets only");
        out << "id=" << i << "\tround=" << ex.round << "\tx=";
        for (std::size_t j = 0; j < ex.x.size(); ++j) out << (j ? "," : "") << detail::exact(ex.x[j]);
        out << "\ty=" << detail::exact(*y) << '\n';
    }
}

inline StratifiedDataset<LabeledExample> read_synthetic_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("parse error: empty synthetic dataset");
    StratifiedDataset<LabeledExample> data;
    data.seed = detail::parse_header_seed(line, kSynthDataHeader);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::parse_fields(line);
        LabeledExample ex;
        ex.round = static_cast<int>(detail::parse_long(detail::field(f, "round"), "round"));
        for (const auto& v : detail::split(detail::field(f, "x"), ','))
            ex.x.push_back(detail::parse_double(v, "x"));
        ex.y = detail::parse_double(detail::field(f, "y"), "y");
        data.samples.push_back(std::move(ex));
    }
    return data;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace spcl
