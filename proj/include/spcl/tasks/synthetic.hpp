#pragma once

// Regression curriculum: round k samples use the first k orthonormal Legendre
// features of u ~ U(-1, 1) (the rest are zero), so the target polynomial has
// degree k, and the label noise grows with k. Late rounds also carry a
// fraction of sign-flipped targets. One linear model fits every clean round
// up to noise.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "spcl/learners.hpp"
#include "spcl/tasks/dataset.hpp"

namespace spcl {

inline constexpr std::size_t kSyntheticFeatures = 5;

struct SyntheticParams {
    std::array<double, kSyntheticFeatures> coefficients{1.0, -0.8, 0.6, -0.5, 0.4};
    std::array<double, 5> noise{0.05, 0.1, 0.2, 0.3, 0.4};  // per round
    std::array<double, 5> flip{0.0, 0.0, 0.1, 0.2, 0.3};    // per round

    /// Same inputs and polynomial, no noise and no flips (held-out scoring).
    static SyntheticParams clean() {
        SyntheticParams p;
        p.noise.fill(0.0);
        p.flip.fill(0.0);
        return p;
    }
};

/// sqrt(2j+1) * P_j(u) for j = 1..5, orthonormal under U(-1, 1).
inline std::array<double, kSyntheticFeatures> legendre_features(double u) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double p1 = u;
    const double p2 = 0.5 * (3.0 * u2 - 1.0);
    const double p3 = 0.5 * (5.0 * u3 - 3.0 * u);
    const double p4 = (35.0 * u2 * u2 - 30.0 * u2 + 3.0) / 8.0;
    const double p5 = (63.0 * u3 * u2 - 70.0 * u3 + 15.0 * u) / 8.0;
    return {std::sqrt(3.0) * p1, std::sqrt(5.0) * p2, std::sqrt(7.0) * p3, 3.0 * p4,
            std::sqrt(11.0) * p5};
}

inline StratifiedDataset<LabeledExample> generate_synthetic_dataset(
    int n_per_round, std::uint64_t seed, const SyntheticParams& params = {}) {
    detail::require(n_per_round >= 1, "synthetic dataset: n_per_round must be >= 1");
    for (std::size_t r = 0; r < 5; ++r)
        detail::require(params.noise[r] >= 0.0 && params.flip[r] >= 0.0 && params.flip[r] <= 1.0,
                        "synthetic dataset: noise must be >= 0 and flip in [0, 1]");
    StratifiedDataset<LabeledExample> data;
    data.seed = seed;
    data.samples.reserve(static_cast<std::size_t>(n_per_round) * 5);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> input(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int round = kMinRound; round <= kMaxRound; ++round) {
        for (int i = 0; i < n_per_round; ++i) {
            const auto basis = legendre_features(input(rng));
            LabeledExample ex;
            ex.x.assign(kSyntheticFeatures, 0.0);
            double y = 0.0;
            for (int j = 0; j < round; ++j) {
                ex.x[static_cast<std::size_t>(j)] = basis[static_cast<std::size_t>(j)];
                y += params.coefficients[static_cast<std::size_t>(j)] * basis[static_cast<std::size_t>(j)];
            }
            const auto r = static_cast<std::size_t>(round - 1);
            const bool flipped = unit(rng) < params.flip[r];
            ex.y = (flipped ? -y : y) + params.noise[r] * gauss(rng);
            ex.round = round;
            data.samples.push_back(std::move(ex));
        }
    }
    return data;
}

}  // namespace spcl
