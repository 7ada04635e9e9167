#pragma once

// A grid of square rooms. Moves are 4-neighbour; inside a room every move is
// open, and the only edges between rooms are doors placed on shared walls.

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spcl/errors.hpp"

namespace spcl {

struct Cell {
    int row = 0;
    int col = 0;

    auto operator<=>(const Cell&) const = default;
};

enum class Direction : int { North = 0, East = 1, South = 2, West = 3 };

inline constexpr std::array<Direction, 4> kDirections{Direction::North, Direction::East,
                                                      Direction::South, Direction::West};

inline Cell step(Cell c, Direction d) {
    switch (d) {
        case Direction::North: return {c.row - 1, c.col};
        case Direction::East: return {c.row, c.col + 1};
        case Direction::South: return {c.row + 1, c.col};
        case Direction::West: return {c.row, c.col - 1};
    }
    return c;
}

/// Direction from a to an adjacent cell b, if they are 4-neighbours.
inline std::optional<Direction> direction_between(Cell a, Cell b) {
    for (Direction d : kDirections)
        if (step(a, d) == b) return d;
    return std::nullopt;
}

inline constexpr std::array<const char*, 6> kRoomTypeNames{"kitchen", "bedroom", "bathroom",
                                                           "hallway", "office",  "lounge"};
inline constexpr int kRoomTypeCount = static_cast<int>(kRoomTypeNames.size());

struct Door {
    Cell a;
    Cell b;

    auto operator<=>(const Door&) const = default;
};

class RoomGrid {
public:
    RoomGrid(int rooms_x, int rooms_y, int room_size, std::vector<int> room_types,
             std::vector<Door> doors)
        : rooms_x_(rooms_x), rooms_y_(rooms_y), room_size_(room_size),
          room_types_(std::move(room_types)) {
        detail::require(rooms_x >= 1 && rooms_y >= 1 && room_size >= 1,
                        "room grid: dimensions must be >= 1");
        detail::require(static_cast<int>(room_types_.size()) == room_count(),
                        "room grid: one room type per room required");
        for (int t : room_types_)
            detail::require(t >= 0 && t < kRoomTypeCount, "room grid: unknown room type");
        for (const Door& d : doors) add_door(d);
    }

    int rooms_x() const noexcept { return rooms_x_; }
    int rooms_y() const noexcept { return rooms_y_; }
    int room_size() const noexcept { return room_size_; }
    int rows() const noexcept { return rooms_y_ * room_size_; }
    int cols() const noexcept { return rooms_x_ * room_size_; }
    int room_count() const noexcept { return rooms_x_ * rooms_y_; }
    int cell_count() const noexcept { return rows() * cols(); }

    bool in_bounds(Cell c) const noexcept {
        return c.row >= 0 && c.col >= 0 && c.row < rows() && c.col < cols();
    }

    int room_of(Cell c) const {
        detail::require(in_bounds(c), "room grid: cell out of bounds");
        return (c.row / room_size_) * rooms_x_ + c.col / room_size_;
    }

    int room_type(int room) const { return room_types_.at(static_cast<std::size_t>(room)); }
    const std::vector<int>& room_types() const noexcept { return room_types_; }

    /// Doors in canonical (a < b) order.
    std::vector<Door> doors() const { return {doors_.begin(), doors_.end()}; }

    bool has_door(Cell a, Cell b) const {
        return doors_.count(a < b ? Door{a, b} : Door{b, a}) > 0;
    }

    /// Destination of a move, or nullopt when a wall or the boundary blocks it.
    std::optional<Cell> move(Cell from, Direction d) const {
        const Cell to = step(from, d);
        if (!in_bounds(from) || !in_bounds(to)) return std::nullopt;
        if (room_of(from) == room_of(to) || has_door(from, to)) return to;
        return std::nullopt;
    }

    bool passable(Cell a, Cell b) const {
        const auto d = direction_between(a, b);
        return d && move(a, *d).has_value();
    }

    /// Is there a door leaving this cell in direction d?
    bool door_towards(Cell c, Direction d) const {
        const Cell to = step(c, d);
        return in_bounds(to) && has_door(c, to);
    }

    std::size_t index_of(Cell c) const {
        return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(cols()) +
               static_cast<std::size_t>(c.col);
    }
    Cell cell_at(std::size_t index) const {
        return {static_cast<int>(index / static_cast<std::size_t>(cols())),
                static_cast<int>(index % static_cast<std::size_t>(cols()))};
    }

    bool operator==(const RoomGrid& other) const {
        return rooms_x_ == other.rooms_x_ && rooms_y_ == other.rooms_y_ &&
               room_size_ == other.room_size_ && room_types_ == other.room_types_ &&
               doors_ == other.doors_;
    }

private:
    void add_door(Door d) {
        detail::require(in_bounds(d.a) && in_bounds(d.b), "room grid: door out of bounds");
        detail::require(direction_between(d.a, d.b).has_value(),
                        "room grid: door cells must be adjacent");
        detail::require(room_of(d.a) != room_of(d.b), "room grid: door must join two rooms");
        if (d.b < d.a) std::swap(d.a, d.b);
        doors_.insert(d);
    }

    int rooms_x_;
    int rooms_y_;
    int room_size_;
    std::vector<int> room_types_;
    std::set<Door> doors_;
};

/// Breadth-first shortest path from start to goal. Neighbours are expanded in
/// N, E, S, W order and each cell keeps its first discoverer, so ties resolve
/// deterministically. Empty when unreachable.
inline std::vector<Cell> shortest_path(const RoomGrid& world, Cell start, Cell goal) {
    detail::require(world.in_bounds(start) && world.in_bounds(goal),
                    "shortest_path: cell out of bounds");
    const std::size_t n = static_cast<std::size_t>(world.cell_count());
    std::vector<std::size_t> parent(n, n);
    std::vector<bool> seen(n, false);
    std::queue<Cell> frontier;
    frontier.push(start);
    seen[world.index_of(start)] = true;
    while (!frontier.empty()) {
        const Cell c = frontier.front();
        frontier.pop();
        if (c == goal) break;
        for (Direction d : kDirections) {
            const auto next = world.move(c, d);
            if (!next || seen[world.index_of(*next)]) continue;
            seen[world.index_of(*next)] = true;
            parent[world.index_of(*next)] = world.index_of(c);
            frontier.push(*next);
        }
    }
    if (!seen[world.index_of(goal)]) return {};
    std::vector<Cell> path{goal};
    for (std::size_t i = world.index_of(goal); i != world.index_of(start); i = parent[i])
        path.push_back(world.cell_at(parent[i]));
    std::reverse(path.begin(), path.end());
    return path;
}

inline bool is_connected(const RoomGrid& world) {
    const std::size_t n = static_cast<std::size_t>(world.cell_count());
    std::vector<bool> seen(n, false);
    std::vector<Cell> stack{Cell{0, 0}};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const Cell c = stack.back();
        stack.pop_back();
        for (Direction d : kDirections) {
            const auto next = world.move(c, d);
            if (next && !seen[world.index_of(*next)]) {
                seen[world.index_of(*next)] = true;
                ++reached;
                stack.push_back(*next);
            }
        }
    }
    return reached == n;
}

/// Rooms joined by a spanning tree of doors (random Kruskal), plus one extra
/// door on each remaining shared wall with probability door_density.
inline RoomGrid generate_room_grid(int rooms_x, int rooms_y, int room_size, double door_density,
                                   std::uint64_t seed) {
    detail::require(rooms_x >= 1 && rooms_y >= 1 && room_size >= 1,
                    "generate_room_grid: dimensions must be >= 1");
    detail::require(door_density > 0.0 && door_density <= 1.0,
                    "generate_room_grid: door density must lie in (0, 1]");
    std::mt19937_64 rng(seed);
    const int rooms = rooms_x * rooms_y;

    std::vector<int> types(static_cast<std::size_t>(rooms));
    std::uniform_int_distribution<int> type_dist(0, kRoomTypeCount - 1);
    for (int& t : types) t = type_dist(rng);

    // Adjacent room pairs; horizontal pairs first, in row-major order.
    struct Wall {
        int r1, r2;
        bool horizontal;
    };
    std::vector<Wall> walls;
    for (int ry = 0; ry < rooms_y; ++ry)
        for (int rx = 0; rx + 1 < rooms_x; ++rx) walls.push_back({ry * rooms_x + rx, ry * rooms_x + rx + 1, true});
    for (int ry = 0; ry + 1 < rooms_y; ++ry)
        for (int rx = 0; rx < rooms_x; ++rx) walls.push_back({ry * rooms_x + rx, (ry + 1) * rooms_x + rx, false});
    std::shuffle(walls.begin(), walls.end(), rng);

    std::vector<int> root(static_cast<std::size_t>(rooms));
    std::iota(root.begin(), root.end(), 0);
    auto parent_of = [&](int r) -> int& { return root[static_cast<std::size_t>(r)]; };
    auto find = [&](int r) {
        while (parent_of(r) != r) r = parent_of(r) = parent_of(parent_of(r));
        return r;
    };

    std::uniform_int_distribution<int> offset_dist(0, room_size - 1);
    std::bernoulli_distribution extra(door_density);
    std::vector<Door> doors;
    for (auto [r1, r2, horizontal] : walls) {
        const int a = find(r1);
        const int b = find(r2);
        const bool tree_edge = a != b;
        if (tree_edge) parent_of(a) = b;
        // Draw both variates every time so the layout depends only on the seed.
        const bool keep = extra(rng);
        const int offset = offset_dist(rng);
        if (!tree_edge && !keep) continue;
        const int ry = r1 / rooms_x;
        const int rx = r1 % rooms_x;
        if (horizontal) {
            const int row = ry * room_size + offset;
            const int col = (rx + 1) * room_size - 1;
            doors.push_back({{row, col}, {row, col + 1}});
        } else {
            const int row = (ry + 1) * room_size - 1;
            const int col = rx * room_size + offset;
            doors.push_back({{row, col}, {row + 1, col}});
        }
    }
    return RoomGrid(rooms_x, rooms_y, room_size, std::move(types), std::move(doors));
}

/// Consecutive cells must be equal or joined by an open move.
inline void validate_trajectory(std::span<const Cell> trajectory, const RoomGrid& world) {
    detail::require(!trajectory.empty(), "trajectory: empty");
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        detail::require(world.in_bounds(trajectory[i]), "trajectory: cell out of bounds");
        if (i > 0 && trajectory[i] != trajectory[i - 1])
            detail::require(world.passable(trajectory[i - 1], trajectory[i]),
                            "trajectory: consecutive cells are not connected");
    }
}

/// Number of distinct rooms the trajectory visits.
inline int room_length(std::span<const Cell> trajectory, const RoomGrid& world) {
    validate_trajectory(trajectory, world);
    std::set<int> rooms;
    for (Cell c : trajectory) rooms.insert(world.room_of(c));
    return static_cast<int>(rooms.size());
}

/// Rounds 1-4 hold paths covering exactly that many rooms; round 5 the rest.
inline int assign_round(int room_length) {
    detail::require(room_length >= 1, "assign_round: room length must be >= 1");
    return std::min(room_length, 5);
}

}  // namespace spcl
