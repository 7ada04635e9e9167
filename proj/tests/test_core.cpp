#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "spcl/core.hpp"
#include "spcl/weight_oracle.hpp"
#include "support/oracles.hpp"

using namespace spcl;

namespace {

std::vector<double> vec(std::initializer_list<double> v) { return v; }

void expect_near_vec(const std::vector<double>& got, const std::vector<double>& want, double tol) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

}  // namespace

TEST(Regularizer, BinaryIsNegativeLambdaTimesL1) {
    EXPECT_DOUBLE_EQ(regularizer_value(Scheme::Binary, vec({1, 1}), 2.0), -4.0);
}

TEST(Regularizer, LinearZeroWeights) {
    EXPECT_DOUBLE_EQ(regularizer_value(Scheme::Linear, vec({0, 0, 0}), 5.0), 0.0);
}

TEST(Regularizer, LinearUnitWeight) {
    EXPECT_DOUBLE_EQ(regularizer_value(Scheme::Linear, vec({1}), 2.0), -1.0);
}

TEST(Regularizer, NeverPositive) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0), lam(0.1, 10.0);
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> w{u(rng), u(rng), u(rng)};
        for (auto s : {Scheme::Binary, Scheme::Linear}) EXPECT_LE(regularizer_value(s, w, lam(rng)), 0.0);
    }
}

TEST(Regularizer, RejectsNonFinite) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(regularizer_value(Scheme::Linear, vec({nan}), 2.0), DomainError);
    EXPECT_THROW(regularizer_value(Scheme::Binary, vec({0.5}), nan), DomainError);
    EXPECT_THROW(regularizer_value(Scheme::Binary, vec({1.5}), 2.0), DomainError);
    EXPECT_THROW(regularizer_value(Scheme::Binary, vec({0.5}), 0.0), DomainError);
}

TEST(ClosedForm, LinearExamples) {
    EXPECT_DOUBLE_EQ(closed_form_weight(Scheme::Linear, 1.0, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(closed_form_weight(Scheme::Linear, 0.0, 2.0), 1.0);
    EXPECT_DOUBLE_EQ(closed_form_weight(Scheme::Linear, 3.0, 2.0), 0.0);
}

TEST(ClosedForm, BinaryIsIndicator) {
    EXPECT_DOUBLE_EQ(closed_form_weight(Scheme::Binary, 3.0, 2.0), 0.0);
    EXPECT_DOUBLE_EQ(closed_form_weight(Scheme::Binary, 1.0, 2.0), 1.0);
    // Not the loss-scaled value: the weight stays in [0,1] for any loss.
    EXPECT_DOUBLE_EQ(closed_form_weight(Scheme::Binary, 1.5, 2.0), 1.0);
}

TEST(ClosedForm, BinaryTieTakesOne) { EXPECT_DOUBLE_EQ(closed_form_weight(Scheme::Binary, 2.0, 2.0), 1.0); }

TEST(ClosedForm, MatchesOracleOnSampledInstances) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> loss(0.0, 10.0), lam(0.1, 10.0);
    const CurriculumRegion region({1.0}, 1.0);
    for (int k = 0; k < 5000; ++k) {
        const Scheme s = k % 2 ? Scheme::Linear : Scheme::Binary;
        const double l = loss(rng), lambda = lam(rng);
        const auto w = brute_force_weight_oracle(s, LossSnapshot{{l}, 0}, lambda, region, 1e-4);
        EXPECT_NEAR(closed_form_weight(s, l, lambda), w[0], 1e-3) << to_string(s) << " l=" << l << " lambda=" << lambda;
    }
}

TEST(ClosedForm, NonIncreasingInLoss) {
    for (auto s : {Scheme::Binary, Scheme::Linear}) {
        double prev = 2.0;
        for (double l = 0.0; l <= 6.0; l += 0.01) {
            const double w = closed_form_weight(s, l, 3.0);
            EXPECT_LE(w, prev);
            prev = w;
        }
    }
}

TEST(ClosedForm, RejectsBadInputs) {
    EXPECT_THROW(closed_form_weight(Scheme::Linear, -1.0, 2.0), DomainError);
    EXPECT_THROW(closed_form_weight(Scheme::Linear, 1.0, -2.0), DomainError);
    EXPECT_THROW(closed_form_weight(Scheme::Linear, std::numeric_limits<double>::infinity(), 2.0), DomainError);
}

TEST(Region, ConstructorValidates) {
    EXPECT_THROW(CurriculumRegion({}, 1.0), DomainError);
    EXPECT_THROW(CurriculumRegion({1.0, 0.0}, 1.0), DomainError);
    EXPECT_THROW(CurriculumRegion({1.0}, -1.0), DomainError);
    EXPECT_NO_THROW(CurriculumRegion({1.0, 2.0}, 0.0));
}

TEST(Region, FromCurriculumExamples) {
    const std::vector<int> r1{1, 1, 2};
    const auto a = region_from_curriculum(r1, 1.0);
    expect_near_vec(a.coefficients(), {1, 1, 2}, 0.0);
    EXPECT_DOUBLE_EQ(a.budget(), 4.0);

    const std::vector<int> r2{3};
    const auto b = region_from_curriculum(r2, 0.95);
    EXPECT_DOUBLE_EQ(b.coefficients()[0], 3.0);
    EXPECT_NEAR(b.budget(), 2.85, 1e-12);

    const std::vector<int> r3{1, 2, 3, 4, 5};
    EXPECT_NEAR(region_from_curriculum(r3, 0.95).budget(), 14.25, 1e-12);
}

TEST(Region, FromCurriculumRejects) {
    const std::vector<int> bad{1, 6};
    EXPECT_THROW(region_from_curriculum(bad, 1.0), DomainError);
    const std::vector<int> zero{0};
    EXPECT_THROW(region_from_curriculum(zero, 1.0), DomainError);
    const std::vector<int> none;
    EXPECT_THROW(region_from_curriculum(none, 1.0), DomainError);
    const std::vector<int> ok{1};
    EXPECT_THROW(region_from_curriculum(ok, 0.9), DomainError);
    EXPECT_THROW(region_from_curriculum(ok, 1.01), DomainError);
}

TEST(Region, RespectsRankOrder) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> rank(1, 5);
    std::vector<int> ranks(50);
    for (auto& r : ranks) r = rank(rng);
    const auto region = region_from_curriculum(ranks, 0.97);
    const auto& a = region.coefficients();
    for (std::size_t i = 0; i < ranks.size(); ++i)
        for (std::size_t j = 0; j < ranks.size(); ++j) {
            if (ranks[i] < ranks[j]) {
                EXPECT_LT(a[i], a[j]);
            } else if (ranks[i] == ranks[j]) {
                EXPECT_EQ(a[i], a[j]);
            }
        }
    EXPECT_GE(region.budget(), 0.95 * region.l1_norm());
    EXPECT_LE(region.budget(), region.l1_norm());
}

TEST(Projection, FeasiblePointIsFixed) {
    const CurriculumRegion r({1.0, 2.0}, 4.0);
    expect_near_vec(project_onto_region(vec({0.5, 0.5}), r), {0.5, 0.5}, 0.0);
}

TEST(Projection, HalfspaceExample) {
    const CurriculumRegion r({1.0, 2.0}, 2.0);
    const auto w = project_onto_region(vec({1, 1}), r);
    expect_near_vec(w, {0.8, 0.6}, 1e-8);
    const std::vector<double> v{1, 1};
    EXPECT_NEAR(std::hypot(w[0] - 1, w[1] - 1), oracle::projection_grid_distance(v, r.coefficients(), 2.0), 2e-3);
}

TEST(Projection, BoxClippingAlone) {
    const CurriculumRegion r({1.0, 1.0}, 2.0);
    expect_near_vec(project_onto_region(vec({2, -1}), r), {1, 0}, 0.0);
}

TEST(Projection, ZeroBudgetGivesOrigin) {
    const CurriculumRegion r({1.0, 3.0}, 0.0);
    expect_near_vec(project_onto_region(vec({0.7, 0.2}), r), {0, 0}, 1e-9);
}

TEST(Projection, IdempotentAndFeasible) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> v(-1.0, 2.0), a(0.1, 5.0), frac(0.0, 1.0);
    for (int k = 0; k < 300; ++k) {
        const std::size_t n = 1 + static_cast<std::size_t>(k % 6);
        std::vector<double> coef(n), point(n);
        double l1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            coef[i] = a(rng);
            point[i] = v(rng);
            l1 += coef[i];
        }
        const CurriculumRegion region(coef, frac(rng) * l1);
        const auto p = project_onto_region(point, region);
        EXPECT_TRUE(region.contains(p, 1e-9));
        EXPECT_EQ(project_onto_region(p, region), p);
    }
}

TEST(Projection, RejectsBadInput) {
    const CurriculumRegion r({1.0, 1.0}, 1.0);
    EXPECT_THROW(project_onto_region(vec({1.0}), r), DomainError);
    EXPECT_THROW(project_onto_region(vec({1.0, std::numeric_limits<double>::quiet_NaN()}), r), DomainError);
}

TEST(Projection, BisectionBudgetExhaustedIsNumericalError) {
    const CurriculumRegion r({1.0, 2.0}, 1.0);
    ProjectionOptions opt;
    opt.max_iterations = 1;
    opt.tolerance = 1e-15;
    try {
        project_onto_region(vec({1, 1}), r, opt);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_EQ(e.last_iterate().size(), 2u);
        EXPECT_TRUE(r.contains(e.last_iterate(), 1e-12));
    }
}

TEST(Subproblem, FastPathLinear) {
    const CurriculumRegion r({1.0, 2.0}, 3.0);
    const auto w = solve_weight_subproblem(Scheme::Linear, LossSnapshot{{0.5, 3.0}, 0}, 2.0, r);
    expect_near_vec(w, {0.75, 0.0}, 1e-12);
}

TEST(Subproblem, ZeroLossesReduceToProjection) {
    const CurriculumRegion r({1.0, 2.0}, 2.0);
    const auto w = solve_weight_subproblem(Scheme::Linear, LossSnapshot{{0.0, 0.0}, 0}, 2.0, r);
    expect_near_vec(w, {0.8, 0.6}, 1e-6);
}

TEST(Subproblem, BinaryBothActive) {
    const CurriculumRegion r({1.0, 1.0}, 2.0);
    const auto w = solve_weight_subproblem(Scheme::Binary, LossSnapshot{{1.0, 1.0}, 0}, 2.0, r);
    expect_near_vec(w, {1.0, 1.0}, 1e-12);
}

TEST(Subproblem, BindingBinaryFillsCheapestFirst) {
    // Gains l_i - lambda are -1.5 and -1 per unit of weight; a = (1, 1), c = 1:
    // the whole budget goes to the first sample.
    const CurriculumRegion r({1.0, 1.0}, 1.0);
    const auto w = solve_weight_subproblem(Scheme::Binary, LossSnapshot{{0.5, 1.0}, 0}, 2.0, r);
    expect_near_vec(w, {1.0, 0.0}, 1e-6);
}

TEST(Subproblem, MatchesOracleOnSmallInstances) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> loss(0.0, 4.0), lam(0.5, 4.0), a(0.5, 3.0), frac(0.2, 1.0);
    for (int k = 0; k < 40; ++k) {
        const Scheme s = k % 2 ? Scheme::Linear : Scheme::Binary;
        const std::vector<double> l{loss(rng), loss(rng)}, coef{a(rng), a(rng)};
        const CurriculumRegion region(coef, frac(rng) * (coef[0] + coef[1]));
        const double lambda = lam(rng);
        const LossSnapshot snap{l, 0};
        const auto w = solve_weight_subproblem(s, snap, lambda, region);
        const auto o = brute_force_weight_oracle(s, snap, lambda, region, 1e-3);
        EXPECT_TRUE(region.contains(w, 1e-6));
        EXPECT_LE(subproblem_objective(s, w, l, lambda), subproblem_objective(s, o, l, lambda) + 1e-3);
    }
}

// Budget faces nearly parallel to the cost vector make fixed-step PGD crawl.
TEST(Subproblem, BinaryConvergesOnIllConditionedFaces) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> loss(0.0, 5.0), lam(0.1, 5.0), coef(0.5, 5.0), frac(0.0, 1.0);
    for (int k = 0; k < 5000; ++k) {
        std::vector<double> l(2), a(2);
        for (std::size_t i = 0; i < 2; ++i) {
            l[i] = loss(rng);
            a[i] = coef(rng);
        }
        const CurriculumRegion region(a, frac(rng) * (a[0] + a[1]));
        const double lambda = lam(rng);
        const LossSnapshot snap{l, 0};
        std::vector<double> w;
        ASSERT_NO_THROW(w = solve_weight_subproblem(Scheme::Binary, snap, lambda, region)) << "instance " << k;
        const auto o = brute_force_weight_oracle(Scheme::Binary, snap, lambda, region, 1e-2);
        EXPECT_LE(subproblem_objective(Scheme::Binary, w, l, lambda),
                  subproblem_objective(Scheme::Binary, o, l, lambda) + 1e-6);
    }
}

TEST(Subproblem, RejectsDimensionMismatch) {
    const CurriculumRegion r({1.0, 1.0}, 2.0);
    EXPECT_THROW(solve_weight_subproblem(Scheme::Linear, LossSnapshot{{1.0}, 0}, 2.0, r), DomainError);
}

TEST(Subproblem, NonConvergenceCarriesIterateAndGap) {
    // Projected start (0.5, 0.5) is far from the optimum (1, 0); one tiny
    // step cannot close a gap of 0.25.
    const CurriculumRegion r({1.0, 1.0}, 1.0);
    PgdOptions opt;
    opt.max_iterations = 1;
    opt.tolerance = 1e-14;
    opt.step_size = 1e-6;
    try {
        solve_weight_subproblem(Scheme::Binary, LossSnapshot{{0.5, 1.0}, 0}, 2.0, r, opt);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_EQ(e.last_iterate().size(), 2u);
        EXPECT_TRUE(r.contains(e.last_iterate(), 1e-9));
        EXPECT_NEAR(e.objective_gap(), 0.25, 1e-5);
    }
}

TEST(Oracle, Examples) {
    const CurriculumRegion r({1.0}, 1.0);
    expect_near_vec(brute_force_weight_oracle(Scheme::Linear, LossSnapshot{{1.0}, 0}, 2.0, r, 1e-4), {0.5}, 1e-12);
    expect_near_vec(brute_force_weight_oracle(Scheme::Binary, LossSnapshot{{5.0}, 0}, 2.0, r, 1e-4), {0.0}, 0.0);
}

TEST(Oracle, OutputIsFeasible) {
    const CurriculumRegion r({1.0, 2.0, 0.5}, 1.3);
    const auto w = brute_force_weight_oracle(Scheme::Linear, LossSnapshot{{0.1, 0.2, 0.3}, 0}, 3.0, r, 1e-2);
    EXPECT_TRUE(r.contains(w));
}

TEST(Oracle, RejectsLargeOrCoarse) {
    const CurriculumRegion r5({1, 1, 1, 1, 1}, 5.0);
    EXPECT_THROW(brute_force_weight_oracle(Scheme::Linear, LossSnapshot{{1, 1, 1, 1, 1}, 0}, 2.0, r5, 1e-2),
                 DomainError);
    const CurriculumRegion r1({1.0}, 1.0);
    EXPECT_THROW(brute_force_weight_oracle(Scheme::Linear, LossSnapshot{{1}, 0}, 2.0, r1, 0.05), DomainError);
}

TEST(Pace, UpdateRule) {
    EXPECT_DOUBLE_EQ(update_lambda({2.0, 3.0}, 5.0).lambda, 5.0);
    EXPECT_DOUBLE_EQ(update_lambda({6.0, 3.0}, 5.0).lambda, 7.5);
    EXPECT_DOUBLE_EQ(update_lambda({2.0, 3.0}, 2.0).lambda, 3.5);
    EXPECT_DOUBLE_EQ(update_lambda({2.0, 3.0}, 5.0).mu, 3.0);
}

TEST(Pace, StrictlyIncreasing) {
    PaceState p{2.0, 0.5};
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> loss(0.0, 20.0);
    for (int k = 0; k < 200; ++k) {
        const auto next = update_lambda(p, loss(rng));
        EXPECT_GT(next.lambda, p.lambda);
        p = next;
    }
}

TEST(Pace, RejectsInvalidState) {
    EXPECT_THROW(update_lambda({0.0, 1.0}, 1.0), DomainError);
    EXPECT_THROW(update_lambda({1.0, 0.0}, 1.0), DomainError);
    EXPECT_THROW(update_lambda({1.0, 1.0}, std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST(LossSnapshot, RejectsNegativeLoss) {
    const CurriculumRegion r({1.0}, 1.0);
    EXPECT_THROW(solve_weight_subproblem(Scheme::Linear, LossSnapshot{{-0.1}, 0}, 2.0, r), DomainError);
}
