#pragma once

// Self-paced curriculum weighting: regularizers, closed-form weights, the
// curriculum region {w in [0,1]^n : a'w <= c}, projection onto it, the
// constrained weight subproblem and the pacing rule for lambda.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spcl/errors.hpp"

namespace spcl {

enum class Scheme { Binary, Linear };

inline const char* to_string(Scheme scheme) {
    return scheme == Scheme::Binary ? "binary" : "linear";
}

inline Scheme scheme_from_string(const std::string& name) {
    if (name == "binary") return Scheme::Binary;
    if (name == "linear") return Scheme::Linear;
    throw DomainError("unknown self-paced scheme '" + name + "'");
}

/// Pace parameter lambda and its step size mu.
struct PaceState {
    double lambda = 2.0;
    double mu = 1.0;

    void validate() const {
        detail::require(std::isfinite(lambda) && lambda > 0.0, "pace: lambda must be positive");
        detail::require(std::isfinite(mu) && mu > 0.0, "pace: mu must be positive");
    }
};

/// Per-sample losses at a given epoch.
struct LossSnapshot {
    std::vector<double> losses;
    int epoch = 0;

    void validate() const {
        for (double l : losses)
            detail::require(std::isfinite(l) && l >= 0.0,
                            "loss snapshot: losses must be finite and non-negative");
    }
};

/// Linear feasible set {w in [0,1]^n : a'w <= c} with strictly positive a.
class CurriculumRegion {
public:
    CurriculumRegion(std::vector<double> a, double c) : a_(std::move(a)), c_(c) {
        detail::require(!a_.empty(), "curriculum region: empty coefficient vector");
        for (double ai : a_)
            detail::require(std::isfinite(ai) && ai > 0.0,
                            "curriculum region: coefficients must be finite and positive");
        detail::require(std::isfinite(c_) && c_ >= 0.0,
                        "curriculum region: budget must be finite and non-negative");
    }

    std::size_t dimension() const noexcept { return a_.size(); }
    const std::vector<double>& coefficients() const noexcept { return a_; }
    double budget() const noexcept { return c_; }

    double l1_norm() const { return std::accumulate(a_.begin(), a_.end(), 0.0); }

    double constraint_value(std::span<const double> w) const {
        detail::require(w.size() == a_.size(), "curriculum region: dimension mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < a_.size(); ++i) s += a_[i] * w[i];
        return s;
    }

    bool contains(std::span<const double> w, double tol = 0.0) const {
        if (w.size() != a_.size()) return false;
        for (double wi : w)
            if (!(wi >= -tol && wi <= 1.0 + tol)) return false;
        return constraint_value(w) <= c_ + tol;
    }

private:
    std::vector<double> a_;
    double c_;
};

namespace detail {

inline void require_lambda(double lambda) {
    require(std::isfinite(lambda) && lambda > 0.0, "lambda must be finite and positive");
}

inline void require_unit_box(std::span<const double> w) {
    for (double wi : w)
        require(std::isfinite(wi) && wi >= 0.0 && wi <= 1.0, "weights must lie in [0,1]");
}

inline double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace detail

/// g(w; lambda): -lambda*|w|_1 (binary) or lambda/2 * sum(w^2 - 2w) (linear).
inline double regularizer_value(Scheme scheme, std::span<const double> w, double lambda) {
    detail::require_lambda(lambda);
    detail::require_unit_box(w);
    double s = 0.0;
    if (scheme == Scheme::Binary) {
        for (double wi : w) s += wi;
        return -lambda * s;
    }
    for (double wi : w) s += wi * wi - 2.0 * wi;
    return 0.5 * lambda * s;
}

/// Minimizer of w*loss + g(w; lambda) over w in [0,1].
///
/// For the binary scheme this is the indicator 1(loss <= lambda); ties
/// (flat objective) resolve to 1.
inline double closed_form_weight(Scheme scheme, double loss, double lambda) {
    detail::require_lambda(lambda);
    detail::require(std::isfinite(loss) && loss >= 0.0, "loss must be finite and non-negative");
    if (loss > lambda) return 0.0;
    return scheme == Scheme::Binary ? 1.0 : 1.0 - loss / lambda;
}

inline std::vector<double> closed_form_weights(Scheme scheme, std::span<const double> losses,
                                               double lambda) {
    std::vector<double> w(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i)
        w[i] = closed_form_weight(scheme, losses[i], lambda);
    return w;
}

/// sum_i w_i l_i + g(w; lambda), the weight subproblem objective.
inline double subproblem_objective(Scheme scheme, std::span<const double> w,
                                   std::span<const double> losses, double lambda) {
    detail::require(w.size() == losses.size(), "objective: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * losses[i];
    return s + regularizer_value(scheme, w, lambda);
}

struct ProjectionOptions {
    double tolerance = 1e-9;
    int max_iterations = 200;
};

/// Euclidean projection of v onto the region. Clips to the box first; when
/// that violates a'w <= c, bisects on the multiplier t of the halfspace so
/// that clip(v - t*a) meets the budget. The returned point always satisfies
/// the budget as evaluated by CurriculumRegion::constraint_value, so
/// projecting it again returns it unchanged.
inline std::vector<double> project_onto_region(std::span<const double> v,
                                               const CurriculumRegion& region,
                                               const ProjectionOptions& options = {}) {
    const auto& a = region.coefficients();
    const double c = region.budget();
    detail::require(v.size() == a.size(), "projection: dimension mismatch");
    for (double vi : v) detail::require(std::isfinite(vi), "projection: non-finite input");

    auto shifted = [&](double t) {
        std::vector<double> w(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) w[i] = detail::clip01(v[i] - t * a[i]);
        return w;
    };

    std::vector<double> w = shifted(0.0);
    if (region.constraint_value(w) <= c) return w;

    double lo = 0.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) hi = std::max(hi, v[i] / a[i]);
    std::vector<double> w_hi = shifted(hi);
    double s_hi = region.constraint_value(w_hi);

    for (int it = 0; it < options.max_iterations && c - s_hi > options.tolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        std::vector<double> w_mid = shifted(mid);
        const double s_mid = region.constraint_value(w_mid);
        if (s_mid <= c) {
            hi = mid;
            w_hi = std::move(w_mid);
            s_hi = s_mid;
        } else {
            lo = mid;
        }
    }
    if (c - s_hi > options.tolerance)
        throw NumericalError("projection: bisection did not reach the budget (ill-conditioned a)",
                             w_hi, c - s_hi);
    return w_hi;
}

struct PgdOptions {
    /// Defaults to 1/lambda (linear) or 1/(max loss + lambda) (binary).
    /// Under the binary scheme this is the initial step; it doubles after each improving iteration.
    std::optional<double> step_size;
    int max_iterations = 500;
    double tolerance = 1e-8;
};

namespace detail {

inline std::vector<double> subproblem_gradient(Scheme scheme, std::span<const double> w,
                                               std::span<const double> losses, double lambda) {
    std::vector<double> g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        g[i] = scheme == Scheme::Linear ? losses[i] + lambda * (w[i] - 1.0) : losses[i] - lambda;
    return g;
}

/// min_s g's over the region: a fractional knapsack, filled greedily by
/// most negative g_i / a_i.
inline std::vector<double> linear_minimizer(std::span<const double> g,
                                            const CurriculumRegion& region) {
    const auto& a = region.coefficients();
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] < 0.0) order.push_back(i);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return g[i] / a[i] < g[j] / a[j]; });
    std::vector<double> s(g.size(), 0.0);
    double budget = region.budget();
    for (std::size_t i : order) {
        if (budget <= 0.0) break;
        s[i] = std::min(1.0, budget / a[i]);
        budget -= s[i] * a[i];
    }
    return s;
}

}  // namespace detail

/// Upper bound on objective(w) - optimum for feasible w (Frank-Wolfe gap).
inline double subproblem_optimality_gap(Scheme scheme, std::span<const double> w,
                                        std::span<const double> losses, double lambda,
                                        const CurriculumRegion& region) {
    const auto g = detail::subproblem_gradient(scheme, w, losses, lambda);
    const auto s = detail::linear_minimizer(g, region);
    double gap = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) gap += g[i] * (w[i] - s[i]);
    return std::max(gap, 0.0);
}

/// argmin over the region of sum w_i l_i + g(w; lambda).
///
/// Returns the box closed form when it already meets the budget; otherwise
/// runs projected gradient descent from it until the iterate moves less than
/// the tolerance or the optimality gap certifies the same bound.
inline std::vector<double> solve_weight_subproblem(Scheme scheme, const LossSnapshot& snapshot,
                                                   double lambda, const CurriculumRegion& region,
                                                   const PgdOptions& options = {}) {
    const auto& losses = snapshot.losses;
    detail::require_lambda(lambda);
    detail::require(losses.size() == region.dimension(),
                    "weight subproblem: " + std::to_string(losses.size()) +
                        " losses for a region of dimension " +
                        std::to_string(region.dimension()));
    snapshot.validate();

    std::vector<double> w = closed_form_weights(scheme, losses, lambda);
    if (region.constraint_value(w) <= region.budget()) return w;

    const double max_loss = *std::max_element(losses.begin(), losses.end());
    const double step = options.step_size.value_or(
        scheme == Scheme::Linear ? 1.0 / lambda : 1.0 / (max_loss + lambda));
    detail::require(std::isfinite(step) && step > 0.0, "weight subproblem: invalid step size");

    w = project_onto_region(w, region);
    double t = step;
    for (int it = 0; it < options.max_iterations; ++it) {
        const auto g = detail::subproblem_gradient(scheme, w, losses, lambda);
        std::vector<double> trial(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) trial[i] = w[i] - t * g[i];
        std::vector<double> next = project_onto_region(trial, region);
        double moved = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) moved = std::max(moved, std::abs(next[i] - w[i]));
        // Binary objective is linear: every projected step descends, so grow
        // the step while it keeps improving.
        if (scheme == Scheme::Binary &&
            subproblem_objective(scheme, next, losses, lambda) < subproblem_objective(scheme, w, losses, lambda))
            t *= 2.0;
        w = std::move(next);
        if (moved < options.tolerance ||
            subproblem_optimality_gap(scheme, w, losses, lambda, region) < options.tolerance)
            return w;
    }
    const double gap = subproblem_optimality_gap(scheme, w, losses, lambda, region);
    throw NumericalError("weight subproblem: projected gradient did not converge in " +
                             std::to_string(options.max_iterations) + " iterations",
                         w, gap);
}

/// lambda += mu while lambda is below the largest item loss, lambda += mu/2 otherwise.
inline PaceState update_lambda(PaceState state, double max_item_loss) {
    state.validate();
    detail::require(std::isfinite(max_item_loss) && max_item_loss >= 0.0,
                    "update_lambda: max item loss must be finite and non-negative");
    state.lambda += state.lambda < max_item_loss ? state.mu : 0.5 * state.mu;
    return state;
}

inline constexpr int kMinRound = 1;
inline constexpr int kMaxRound = 5;

/// a_i = rank_i, c = c_fraction * |a|_1 with c_fraction in [0.95, 1].
inline CurriculumRegion region_from_curriculum(std::span<const int> ranks, double c_fraction) {
    detail::require(!ranks.empty(), "region_from_curriculum: no ranks");
    detail::require(std::isfinite(c_fraction) && c_fraction >= 0.95 && c_fraction <= 1.0,
                    "region_from_curriculum: c_fraction must lie in [0.95, 1]");
    std::vector<double> a;
    a.reserve(ranks.size());
    for (int r : ranks) {
        detail::require(r >= kMinRound && r <= kMaxRound,
                        "region_from_curriculum: rank " + std::to_string(r) + " outside 1..5");
        a.push_back(static_cast<double>(r));
    }
    const double norm = std::accumulate(a.begin(), a.end(), 0.0);
    return CurriculumRegion(std::move(a), c_fraction * norm);
}

}  // namespace spcl
