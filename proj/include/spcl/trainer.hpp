#pragma once

// Training paradigms over a round-labelled dataset:
//   ML             uniform mini-batches over everything
//   NaiveCL        cumulative exposure 1, 1-2, ..., 1-5
//   ReverseCL      cumulative exposure 5, 5-4, ..., 5-1
//   RandomOrderCL  cumulative exposure in a seed-drawn round order
//   SPCL           uniform batches, per-sample weights in the loss, weights
//                  re-solved every T iterations on the curriculum region and
//                  lambda paced upward after each re-solve.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "spcl/core.hpp"
#include "spcl/learners.hpp"
#include "spcl/random.hpp"

namespace spcl {

enum class ParadigmKind { ML, NaiveCL, SPCL, ReverseCL, RandomOrderCL };

inline const char* to_string(ParadigmKind kind) {
    switch (kind) {
        case ParadigmKind::ML: return "ML";
        case ParadigmKind::NaiveCL: return "NaiveCL";
        case ParadigmKind::SPCL: return "SPCL";
        case ParadigmKind::ReverseCL: return "ReverseCL";
        case ParadigmKind::RandomOrderCL: return "RandomOrderCL";
    }
    return "?";
}

inline ParadigmKind paradigm_kind_from_string(const std::string& name) {
    for (auto k : {ParadigmKind::ML, ParadigmKind::NaiveCL, ParadigmKind::SPCL,
                   ParadigmKind::ReverseCL, ParadigmKind::RandomOrderCL})
        if (name == to_string(k)) return k;
    throw DomainError("unknown paradigm '" + name + "'");
}

using RoundOrder = std::array<int, 5>;

struct SpclParams {
    Scheme scheme = Scheme::Linear;
    double w0 = 0.0;
    double mu = 3.0;
    int update_interval = 0;  // SGD iterations between weight updates; 0 = one epoch
    double c_fraction = 0.95;
    double lambda0 = 2.0;
    PgdOptions pgd;
};

struct StageParams {
    int stage_epochs = 0;  // epochs per stage; 0 = equal fifths of the budget
    std::optional<RoundOrder> order;  // RandomOrderCL; drawn from the run seed when empty
};

struct Paradigm {
    ParadigmKind kind = ParadigmKind::ML;
    std::optional<SpclParams> spcl;
    std::optional<StageParams> stages;

    static Paradigm ml() { return {ParadigmKind::ML, std::nullopt, std::nullopt}; }
    static Paradigm self_paced(SpclParams p) { return {ParadigmKind::SPCL, p, std::nullopt}; }
    static Paradigm naive_cl(StageParams s = {}) { return {ParadigmKind::NaiveCL, std::nullopt, s}; }
    static Paradigm reverse_cl(StageParams s = {}) { return {ParadigmKind::ReverseCL, std::nullopt, s}; }
    static Paradigm random_order_cl(StageParams s = {}) {
        return {ParadigmKind::RandomOrderCL, std::nullopt, s};
    }

    bool staged() const {
        return kind == ParadigmKind::NaiveCL || kind == ParadigmKind::ReverseCL ||
               kind == ParadigmKind::RandomOrderCL;
    }

    void validate() const {
        detail::require((kind == ParadigmKind::SPCL) == spcl.has_value(),
                        "paradigm: SPCL parameters are required for (and only for) SPCL");
        detail::require(staged() == stages.has_value(),
                        "paradigm: a stage schedule is required for (and only for) staged CL");
        if (spcl) {
            const auto& p = *spcl;
            detail::require(p.w0 >= 0.0 && p.w0 <= 1.0, "paradigm: w0 must lie in [0,1]");
            detail::require(std::isfinite(p.mu) && p.mu > 0.0, "paradigm: mu must be positive");
            detail::require(p.update_interval >= 0, "paradigm: update interval must be >= 0");
            detail::require(p.c_fraction >= 0.95 && p.c_fraction <= 1.0,
                            "paradigm: c_fraction must lie in [0.95, 1]");
            detail::require(std::isfinite(p.lambda0) && p.lambda0 > 0.0,
                            "paradigm: lambda0 must be positive");
        }
        if (stages) {
            detail::require(stages->stage_epochs >= 0, "paradigm: stage_epochs must be >= 0");
            if (stages->order) {
                auto sorted = *stages->order;
                std::sort(sorted.begin(), sorted.end());
                detail::require(sorted == RoundOrder{1, 2, 3, 4, 5},
                                "paradigm: round order must be a permutation of 1..5");
            }
        }
    }
};

struct TrainConfig {
    int epochs = 200;
    int iterations_per_epoch = 200;
    int batch_size = 64;
    double learning_rate = 1e-4;
    std::uint64_t seed = 0;

    void validate() const {
        detail::require(epochs >= 0, "train config: epochs must be >= 0");
        detail::require(iterations_per_epoch > 0, "train config: iterations_per_epoch must be > 0");
        detail::require(batch_size > 0, "train config: batch_size must be > 0");
        detail::require(std::isfinite(learning_rate) && learning_rate > 0.0,
                        "train config: learning rate must be > 0");
    }
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double min_iteration_loss = 0.0;
    double max_iteration_loss = 0.0;
    double eval_loss = std::numeric_limits<double>::quiet_NaN();
    double eval_metric = std::numeric_limits<double>::quiet_NaN();
    double weight_mean = 1.0;
    double weight_min = 1.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();  // SPCL only
    bool subproblem_warning = false;
};

struct TrainTrace {
    std::vector<EpochRecord> epochs;
    std::vector<std::string> warnings;
};

struct WeightUpdateEvent {
    long iteration = 0;
    double lambda_used = 0.0;
    PaceState pace_after;
    double max_item_loss = 0.0;
    const std::vector<double>& weights;
    const CurriculumRegion& region;
};

using Evaluator = std::function<EvalMetrics(const ParameterVector&)>;
using RegionBuilder = std::function<CurriculumRegion(std::span<const int> ranks)>;

struct TrainHooks {
    Evaluator evaluate;         // held-out metrics per epoch; empty = training set
    RegionBuilder region;       // empty = region_from_curriculum(ranks, c_fraction)
    std::function<void(const WeightUpdateEvent&)> on_weight_update;
};

struct TrainResult {
    ParameterVector theta;
    TrainTrace trace;
    std::vector<double> weights;  // SPCL final weights; empty otherwise
    std::optional<PaceState> pace;
};

/// Round 1-2 samples start at weight 1, later rounds at w0.
inline std::vector<double> initialize_weights(std::span<const int> rounds, double w0) {
    detail::require(!rounds.empty(), "initialize_weights: no samples");
    detail::require(w0 >= 0.0 && w0 <= 1.0, "initialize_weights: w0 must lie in [0,1]");
    std::vector<double> w;
    w.reserve(rounds.size());
    for (int r : rounds) {
        detail::require(r >= kMinRound && r <= kMaxRound,
                        "initialize_weights: round " + std::to_string(r) + " outside 1..5");
        w.push_back(r <= 2 ? 1.0 : w0);
    }
    return w;
}

inline RoundOrder random_round_order(std::uint64_t seed) {
    RoundOrder order{1, 2, 3, 4, 5};
    std::mt19937_64 rng(derive_seed(seed, 7));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

/// Rounds whose samples are eligible for batches at this epoch.
inline std::set<int> exposure_set(const Paradigm& paradigm, int epoch, int total_epochs) {
    detail::require(epoch >= 0 && epoch < total_epochs, "exposure_set: epoch out of range");
    if (!paradigm.staged()) return {1, 2, 3, 4, 5};
    const StageParams& s = paradigm.stages.value();
    const int stage = s.stage_epochs > 0
                          ? std::min(4, epoch / s.stage_epochs)
                          : static_cast<int>(std::min<long>(4, 5L * epoch / total_epochs));
    RoundOrder order{1, 2, 3, 4, 5};
    if (paradigm.kind == ParadigmKind::ReverseCL) order = {5, 4, 3, 2, 1};
    if (paradigm.kind == ParadigmKind::RandomOrderCL) {
        detail::require(s.order.has_value(), "exposure_set: RandomOrderCL needs a round order");
        order = *s.order;
    }
    return {order.begin(), order.begin() + stage + 1};
}

/// Uniform with replacement over the samples whose round is allowed.
inline std::vector<std::size_t> sample_batch(std::span<const int> rounds,
                                             const std::set<int>& allowed, int batch_size,
                                             std::mt19937_64& rng) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < rounds.size(); ++i)
        if (allowed.count(rounds[i])) pool.push_back(i);
    detail::require(!pool.empty(), "sample_batch: no samples in the allowed rounds");
    detail::require(batch_size > 0, "sample_batch: batch size must be positive");
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<std::size_t> batch(static_cast<std::size_t>(batch_size));
    for (auto& b : batch) b = pool[pick(rng)];
    return batch;
}

inline std::vector<double> per_sample_losses(const PredictorSpec& spec,
                                             std::span<const double> theta,
                                             std::span<const LabeledExample> data) {
    std::vector<double> losses;
    losses.reserve(data.size());
    for (const auto& ex : data) losses.push_back(per_sample_loss(spec, theta, ex));
    return losses;
}

inline std::uint64_t batch_stream_seed(std::uint64_t seed) { return derive_seed(seed, 1); }

/// Mutable state of one run; advanced by run_training.
struct TrainState {
    ParameterVector theta;
    std::vector<double> weights;
    std::optional<PaceState> pace;
    long iteration = 0;
    int epoch = 0;
};

inline TrainResult run_training(const Paradigm& paradigm_in, const PredictorSpec& spec,
                                std::span<const LabeledExample> data, const TrainConfig& config,
                                const TrainHooks& hooks = {}) {
    Paradigm paradigm = paradigm_in;
    if (paradigm.kind == ParadigmKind::RandomOrderCL && paradigm.stages && !paradigm.stages->order)
        paradigm.stages->order = random_round_order(config.seed);
    paradigm.validate();
    spec.validate();
    config.validate();
    detail::require(!data.empty(), "run_training: empty dataset");

    std::vector<int> rounds;
    rounds.reserve(data.size());
    for (const auto& ex : data) {
        detail::require(ex.round >= kMinRound && ex.round <= kMaxRound,
                        "run_training: sample round outside 1..5");
        rounds.push_back(ex.round);
    }

    TrainState state;
    state.theta = init_parameters(spec, config.seed);
    std::mt19937_64 rng(batch_stream_seed(config.seed));
    TrainTrace trace;

    const bool self_paced = paradigm.kind == ParadigmKind::SPCL;
    std::optional<CurriculumRegion> region;
    int interval = config.iterations_per_epoch;
    if (self_paced) {
        const SpclParams& p = *paradigm.spcl;
        region = hooks.region ? hooks.region(rounds) : region_from_curriculum(rounds, p.c_fraction);
        detail::require(region->dimension() == data.size(),
                        "run_training: region dimension does not match the dataset");
        state.weights = project_onto_region(initialize_weights(rounds, p.w0), *region);
        state.pace = PaceState{p.lambda0, p.mu};
        if (p.update_interval > 0) interval = p.update_interval;
    }
    const std::vector<double> unit(static_cast<std::size_t>(config.batch_size), 1.0);

    auto evaluate_now = [&]() {
        return hooks.evaluate ? hooks.evaluate(state.theta) : evaluate(spec, state.theta, data);
    };

    for (state.epoch = 0; state.epoch < config.epochs; ++state.epoch) {
        const std::set<int> allowed = exposure_set(paradigm, state.epoch, config.epochs);
        EpochRecord rec;
        rec.epoch = state.epoch + 1;
        rec.min_iteration_loss = std::numeric_limits<double>::infinity();
        rec.max_iteration_loss = -std::numeric_limits<double>::infinity();
        for (int it = 0; it < config.iterations_per_epoch; ++it) {
            const auto batch = sample_batch(rounds, allowed, config.batch_size, rng);
            std::vector<double> batch_weights;
            if (self_paced) {
                batch_weights.reserve(batch.size());
                for (std::size_t i : batch) batch_weights.push_back(state.weights[i]);
            }
            auto step = weighted_sgd_step_indexed(spec, state.theta, data, batch,
                                                  self_paced ? std::span<const double>(batch_weights)
                                                             : std::span<const double>(unit),
                                                  config.learning_rate);
            state.theta = std::move(step.theta);
            rec.min_iteration_loss = std::min(rec.min_iteration_loss, step.weighted_loss);
            rec.max_iteration_loss = std::max(rec.max_iteration_loss, step.weighted_loss);
            ++state.iteration;

            if (self_paced && state.iteration % interval == 0) {
                const SpclParams& p = *paradigm.spcl;
                LossSnapshot snap{per_sample_losses(spec, state.theta, data), state.epoch};
                const double lambda = state.pace->lambda;
                try {
                    state.weights = solve_weight_subproblem(p.scheme, snap, lambda, *region, p.pgd);
                } catch (const NumericalError& e) {
                    state.weights = e.last_iterate();
                    rec.subproblem_warning = true;
                    trace.warnings.push_back("epoch " + std::to_string(rec.epoch) + ": " + e.what() +
                                             " (gap " + std::to_string(e.objective_gap()) + ")");
                }
                const double max_loss = *std::max_element(snap.losses.begin(), snap.losses.end());
                state.pace = update_lambda(*state.pace, max_loss);
                if (hooks.on_weight_update)
                    hooks.on_weight_update(
                        {state.iteration, lambda, *state.pace, max_loss, state.weights, *region});
            }
        }
        const EvalMetrics m = evaluate_now();
        rec.eval_loss = m.mean_loss;
        rec.eval_metric = m.accuracy;
        if (self_paced) {
            rec.weight_mean = std::accumulate(state.weights.begin(), state.weights.end(), 0.0) /
                              static_cast<double>(state.weights.size());
            rec.weight_min = *std::min_element(state.weights.begin(), state.weights.end());
            rec.lambda = state.pace->lambda;
        }
        trace.epochs.push_back(rec);
    }
    return {std::move(state.theta), std::move(trace), std::move(state.weights), state.pace};
}

/// Per-epoch max minus min iteration loss.
inline std::vector<double> loss_gap_series(const TrainTrace& trace) {
    detail::require(!trace.epochs.empty(), "loss_gap_series: empty trace");
    std::vector<double> gaps;
    gaps.reserve(trace.epochs.size());
    for (const auto& e : trace.epochs) gaps.push_back(e.max_iteration_loss - e.min_iteration_loss);
    return gaps;
}

/// True when the mean eval loss of the last window moved by less than tol
/// relative to the preceding window.
inline bool convergence_check(const TrainTrace& trace, int window, double tol) {
    detail::require(window >= 2, "convergence_check: window must be >= 2");
    const auto w = static_cast<std::size_t>(window);
    detail::require(trace.epochs.size() >= 2 * w, "convergence_check: trace shorter than 2*window");
    const std::size_t n = trace.epochs.size();
    double previous = 0.0;
    double last = 0.0;
    for (std::size_t i = n - 2 * w; i < n - w; ++i) previous += trace.epochs[i].eval_loss;
    for (std::size_t i = n - w; i < n; ++i) last += trace.epochs[i].eval_loss;
    previous /= static_cast<double>(w);
    last /= static_cast<double>(w);
    const double change = std::abs(last - previous);
    return change == 0.0 || change < tol * std::abs(previous);
}

/// First epoch (1-based) whose eval loss is at or below the threshold.
inline std::optional<int> epochs_to_threshold(const TrainTrace& trace, double threshold) {
    for (const auto& e : trace.epochs)
        if (e.eval_loss <= threshold) return e.epoch;
    return std::nullopt;
}

}  // namespace spcl
