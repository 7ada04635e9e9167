#pragma once

// Room-grid navigation: instruction tokens, curriculum-bucketed sample
// generation, step featurization shared by imitation training and greedy
// rollout, and the first-error taxonomy.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spcl/learners.hpp"
#include "spcl/tasks/dataset.hpp"
#include "spcl/tasks/room_grid.hpp"

namespace spcl {

// Actions are absolute moves N, E, S, W, then STOP.
inline constexpr std::size_t kActionCount = 5;
inline constexpr std::size_t kStopAction = 4;

/// Tokens 0-3 are turns relative to the agent's facing (forward, right,
/// back, left), 4 is STOP, 5.. are room-entry tokens by room type.
using Token = int;
inline constexpr Token kStopToken = 4;
inline constexpr Token kFirstRoomToken = 5;
inline constexpr int kVocabularySize = kFirstRoomToken + kRoomTypeCount;

/// Agents start every episode facing north; facing follows the last move.
inline constexpr Direction kInitialFacing = Direction::North;

inline Token turn_token(Direction facing, Direction move) {
    return (static_cast<int>(move) - static_cast<int>(facing) + 4) % 4;
}
inline Direction apply_turn(Direction facing, Token turn) {
    return static_cast<Direction>((static_cast<int>(facing) + turn) % 4);
}
inline Token room_token(int room_type) { return kFirstRoomToken + room_type; }
inline bool is_room_token(Token t) { return t >= kFirstRoomToken && t < kVocabularySize; }

inline std::string token_name(Token t) {
    static constexpr std::array<const char*, 5> kBase{"forward", "right", "back", "left", "STOP"};
    if (t >= 0 && t < kFirstRoomToken) return kBase[static_cast<std::size_t>(t)];
    if (is_room_token(t)) return kRoomTypeNames[static_cast<std::size_t>(t - kFirstRoomToken)];
    throw DomainError("unknown token id " + std::to_string(t));
}

inline Token token_from_name(const std::string& name) {
    for (Token t = 0; t < kVocabularySize; ++t)
        if (token_name(t) == name) return t;
    throw DomainError("unknown token '" + name + "'");
}

struct NavSample {
    int id = 0;
    std::vector<Token> instruction;
    Cell start;
    Cell goal;
    std::vector<Cell> gt_trajectory;
    int round = 1;

    bool operator==(const NavSample&) const = default;
};

/// One turn token per step; a move that enters a new room is preceded by
/// that room's type token. Ends with STOP.
inline std::vector<Token> make_instruction(std::span<const Cell> path, const RoomGrid& world) {
    std::vector<Token> tokens;
    Direction facing = kInitialFacing;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const auto d = direction_between(path[k], path[k + 1]);
        detail::require(d.has_value(), "instruction: path cells not adjacent");
        const int next_room = world.room_of(path[k + 1]);
        if (next_room != world.room_of(path[k])) tokens.push_back(room_token(world.room_type(next_room)));
        tokens.push_back(turn_token(facing, *d));
        facing = *d;
    }
    tokens.push_back(kStopToken);
    return tokens;
}

struct NavGenerationOptions {
    int attempts_per_sample = 4000;
};

/// Rejection-samples (start, goal) pairs until each requested round has its
/// count. Ground truth is the BFS shortest path with N, E, S, W tie-breaking.
inline StratifiedDataset<NavSample> generate_nav_dataset(const RoomGrid& world,
                                                         const std::map<int, int>& counts,
                                                         std::uint64_t seed,
                                                         const NavGenerationOptions& options = {}) {
    StratifiedDataset<NavSample> data;
    data.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> cell_dist(
        0, static_cast<std::size_t>(world.cell_count()) - 1);
    int next_id = 0;
    for (const auto& [round, count] : counts) {
        detail::require(round >= kMinRound && round <= kMaxRound,
                        "nav dataset: round " + std::to_string(round) + " outside 1..5");
        detail::require(count >= 0, "nav dataset: negative count");
        const long budget = static_cast<long>(options.attempts_per_sample) * std::max(count, 1);
        int made = 0;
        for (long attempt = 0; made < count; ++attempt) {
            if (attempt >= budget)
                throw GenerationError("nav dataset: round " + std::to_string(round) +
                                          " starved after " + std::to_string(budget) +
                                          " attempts (" + std::to_string(made) + " of " +
                                          std::to_string(count) + " generated)",
                                      round);
            const Cell start = world.cell_at(cell_dist(rng));
            const Cell goal = world.cell_at(cell_dist(rng));
            if (start == goal) continue;
            auto path = shortest_path(world, start, goal);
            if (path.empty() || assign_round(room_length(path, world)) != round) continue;
            NavSample s;
            s.id = next_id++;
            s.instruction = make_instruction(path, world);
            s.start = start;
            s.goal = goal;
            s.gt_trajectory = std::move(path);
            s.round = round;
            data.samples.push_back(std::move(s));
            ++made;
        }
    }
    return data;
}

// ---------------------------------------------------------------------------
// Featurization

inline constexpr std::size_t kInstructionWindow = 4;

/// One-hot window of instruction tokens (plus a padding symbol) from the
/// reading pointer, one-hot current room id, door indicator per direction,
/// one-hot facing.
inline std::size_t step_feature_dim(const RoomGrid& world) {
    return kInstructionWindow * (kVocabularySize + 1) + static_cast<std::size_t>(world.room_count()) + 8;
}

inline std::vector<double> step_features(const RoomGrid& world, std::span<const Token> instruction,
                                         std::size_t pointer, Cell cell, Direction facing) {
    std::vector<double> f(step_feature_dim(world), 0.0);
    constexpr std::size_t slot = kVocabularySize + 1;
    for (std::size_t j = 0; j < kInstructionWindow; ++j) {
        const std::size_t pos = pointer + j;
        const std::size_t symbol =
            pos < instruction.size() ? static_cast<std::size_t>(instruction[pos]) : kVocabularySize;
        f[j * slot + symbol] = 1.0;
    }
    std::size_t off = kInstructionWindow * slot;
    f[off + static_cast<std::size_t>(world.room_of(cell))] = 1.0;
    off += static_cast<std::size_t>(world.room_count());
    for (Direction d : kDirections)
        f[off + static_cast<std::size_t>(d)] = world.door_towards(cell, d) ? 1.0 : 0.0;
    f[off + 4 + static_cast<std::size_t>(facing)] = 1.0;
    return f;
}

/// Reading pointer after an attempted move: one token per move, one more
/// when the move changed rooms (the room-entry token).
inline std::size_t advance_pointer(std::size_t pointer, const RoomGrid& world, Cell from, Cell to) {
    return pointer + 1 + (world.room_of(from) != world.room_of(to) ? 1 : 0);
}

/// Teacher-forced imitation example along the ground-truth trajectory.
inline LabeledExample imitation_example(const RoomGrid& world, const NavSample& sample) {
    ActionSequence seq;
    std::size_t pointer = 0;
    Direction facing = kInitialFacing;
    const auto& path = sample.gt_trajectory;
    for (std::size_t t = 0; t < path.size(); ++t) {
        seq.step_features.push_back(step_features(world, sample.instruction, pointer, path[t], facing));
        if (t + 1 == path.size()) {
            seq.actions.push_back(kStopAction);
            break;
        }
        const auto d = direction_between(path[t], path[t + 1]);
        detail::require(d.has_value(), "imitation: ground-truth cells not adjacent");
        seq.actions.push_back(static_cast<std::size_t>(*d));
        pointer = advance_pointer(pointer, world, path[t], path[t + 1]);
        facing = *d;
    }
    return {{}, std::move(seq), sample.round};
}

inline std::vector<LabeledExample> imitation_examples(const RoomGrid& world,
                                                      std::span<const NavSample> samples) {
    std::vector<LabeledExample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(imitation_example(world, s));
    return out;
}

// ---------------------------------------------------------------------------
// Rollout

struct StepObservation {
    const std::vector<double>& features;
    std::size_t step;
    Cell cell;
    std::size_t pointer;
    Direction facing;
};

template <class P>
concept NavigationPolicy = requires(P& p, const StepObservation& obs) {
    { p(obs) } -> std::convertible_to<std::vector<double>>;
};

struct RolloutResult {
    std::vector<Cell> trajectory;
    std::vector<std::size_t> actions;
    bool stopped = false;
    bool success = false;
};

/// Greedy (argmax) rollout. Blocked moves leave the agent in place but still
/// turn it. Success means STOP at the goal within max_steps actions.
template <NavigationPolicy Policy>
RolloutResult rollout(Policy&& policy, const RoomGrid& world, const NavSample& sample,
                      std::size_t max_steps) {
    detail::require(max_steps >= sample.gt_trajectory.size(),
                    "rollout: max_steps shorter than the ground-truth trajectory");
    RolloutResult result;
    Cell cell = sample.start;
    std::size_t pointer = 0;
    Direction facing = kInitialFacing;
    result.trajectory.push_back(cell);
    for (std::size_t t = 0; t < max_steps; ++t) {
        const auto features = step_features(world, sample.instruction, pointer, cell, facing);
        const std::vector<double> scores = policy(StepObservation{features, t, cell, pointer, facing});
        detail::require(scores.size() == kActionCount, "rollout: policy must score 5 actions");
        const auto action =
            static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
        result.actions.push_back(action);
        if (action == kStopAction) {
            result.stopped = true;
            break;
        }
        facing = static_cast<Direction>(action);
        const Cell next = world.move(cell, facing).value_or(cell);
        pointer = advance_pointer(pointer, world, cell, next);
        cell = next;
        result.trajectory.push_back(cell);
    }
    result.success = result.stopped && cell == sample.goal;
    return result;
}

inline RolloutResult rollout_policy(const PredictorSpec& spec, std::span<const double> theta,
                                    const RoomGrid& world, const NavSample& sample,
                                    std::size_t max_steps) {
    detail::require(spec.output_dim == kActionCount, "rollout: policy must have 5 outputs");
    auto policy = [&](const StepObservation& obs) { return predict(spec, theta, obs.features); };
    return rollout(policy, world, sample, max_steps);
}

// ---------------------------------------------------------------------------
// Evaluation breakdowns

enum class FirstErrorKind { None, In, Cross, Others };

inline const char* to_string(FirstErrorKind kind) {
    switch (kind) {
        case FirstErrorKind::None: return "none";
        case FirstErrorKind::In: return "in";
        case FirstErrorKind::Cross: return "cross";
        case FirstErrorKind::Others: return "others";
    }
    return "?";
}

/// Labels an episode by its first deviation from the ground truth: In when
/// the correct next cell is in the agent's current room, Cross when it is in
/// another room. Following the ground truth but stopping early, overshooting
/// or ending away from the goal is Others; an exact match is None.
inline FirstErrorKind classify_first_error(std::span<const Cell> predicted,
                                           std::span<const Cell> gt, const RoomGrid& world,
                                           Cell goal) {
    detail::require(!gt.empty() && !predicted.empty(), "first error: empty trajectory");
    const std::size_t overlap = std::min(predicted.size(), gt.size());
    for (std::size_t k = 1; k < overlap; ++k) {
        if (predicted[k] != gt[k])
            return world.room_of(gt[k]) == world.room_of(predicted[k - 1]) ? FirstErrorKind::In
                                                                            : FirstErrorKind::Cross;
    }
    if (predicted.size() == gt.size() && predicted.back() == goal) return FirstErrorKind::None;
    return FirstErrorKind::Others;
}

struct EpisodeResult {
    int round = 1;
    bool success = false;
    FirstErrorKind first_error = FirstErrorKind::None;
};

inline std::map<int, double> success_rate_by_round(std::span<const EpisodeResult> results) {
    detail::require(!results.empty(), "success_rate_by_round: no results");
    std::map<int, std::pair<std::size_t, std::size_t>> tally;
    for (const auto& r : results) {
        auto& [hits, total] = tally[r.round];
        hits += r.success ? 1 : 0;
        ++total;
    }
    std::map<int, double> rates;
    for (const auto& [round, t] : tally)
        rates[round] = static_cast<double>(t.first) / static_cast<double>(t.second);
    return rates;
}

inline std::map<FirstErrorKind, double> first_error_distribution(
    std::span<const EpisodeResult> results) {
    detail::require(!results.empty(), "first_error_distribution: no results");
    std::map<FirstErrorKind, double> dist;
    for (const auto& r : results) dist[r.first_error] += 1.0;
    for (auto& [kind, v] : dist) v /= static_cast<double>(results.size());
    return dist;
}

/// Rolls out every sample and labels each episode.
inline std::vector<EpisodeResult> evaluate_navigation(const PredictorSpec& spec,
                                                      std::span<const double> theta,
                                                      const RoomGrid& world,
                                                      std::span<const NavSample> samples) {
    std::vector<EpisodeResult> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        const auto r = rollout_policy(spec, theta, world, s, 2 * s.gt_trajectory.size());
        out.push_back({s.round, r.success,
                       classify_first_error(r.trajectory, s.gt_trajectory, world, s.goal)});
    }
    return out;
}

}  // namespace spcl
