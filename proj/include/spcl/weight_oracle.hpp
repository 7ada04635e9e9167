#pragma once

// Exhaustive grid search for the weight subproblem. Exponential in n, so it
// is only meant as a reference for tests and for deriving expected values.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "spcl/core.hpp"

namespace spcl {

inline constexpr std::size_t kOracleMaxDimension = 4;

inline std::vector<double> brute_force_weight_oracle(Scheme scheme, const LossSnapshot& snapshot,
                                                     double lambda,
                                                     const CurriculumRegion& region,
                                                     double resolution) {
    const auto& losses = snapshot.losses;
    const std::size_t n = losses.size();
    detail::require(n >= 1 && n <= kOracleMaxDimension, "oracle: dimension must be 1..4");
    detail::require(n == region.dimension(), "oracle: dimension mismatch");
    detail::require(std::isfinite(resolution) && resolution > 0.0 && resolution <= 1e-2,
                    "oracle: resolution must lie in (0, 1e-2]");
    detail::require(std::isfinite(lambda) && lambda > 0.0, "oracle: lambda must be positive");
    snapshot.validate();

    const auto steps = static_cast<std::size_t>(std::ceil(1.0 / resolution - 1e-9));
    std::vector<double> grid(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) grid[k] = static_cast<double>(k) / steps;

    // term[i][k]: contribution of coordinate i at grid value k.
    std::vector<std::vector<double>> term(n, std::vector<double>(grid.size()));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double w = grid[k];
            term[i][k] = scheme == Scheme::Binary
                             ? w * losses[i] - lambda * w
                             : w * losses[i] + 0.5 * lambda * (w * w - 2.0 * w);
        }

    const auto& a = region.coefficients();
    const double c = region.budget();
    std::vector<std::size_t> idx(n, 0);
    std::vector<std::size_t> best(n, 0);
    double best_value = std::numeric_limits<double>::infinity();
    for (;;) {
        double lhs = 0.0;
        double value = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lhs += a[i] * grid[idx[i]];
            value += term[i][idx[i]];
        }
        if (lhs <= c && value < best_value) {
            best_value = value;
            best = idx;
        }
        std::size_t d = 0;
        while (d < n && ++idx[d] == grid.size()) idx[d++] = 0;
        if (d == n) break;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = grid[best[i]];
    return w;
}

}  // namespace spcl
