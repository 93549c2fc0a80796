#include <array>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "recurflow/errors.hpp"
#include "recurflow/skewprod.hpp"

using namespace recurflow;
using namespace recurflow::skewprod;
using funcspace::AnalyticSignal;

namespace {

nse2d::ForcingField single_shear(AnalyticSignal temporal) {
    const std::array<std::array<int, 2>, 1> modes = {{{0, 1}}};
    const std::array<double, 1> w = {1.0};
    return nse2d::shear_pattern(modes, w, std::move(temporal));
}

}  // namespace

TEST(HullElement, KindsFollowTheGenerator) {
    EXPECT_EQ(HullElement().kind(), HullKind::point);
    EXPECT_EQ(HullElement(single_shear(AnalyticSignal::constant({1.0}))).kind(), HullKind::point);
    EXPECT_EQ(HullElement(single_shear(AnalyticSignal::periodic({1.0}, 1.0))).kind(), HullKind::torus);
    const HullElement line(single_shear(AnalyticSignal::poisson_example()));
    EXPECT_EQ(line.kind(), HullKind::line);
    EXPECT_FALSE(line.compact_minimal());
}

TEST(HullElement, TorusDriveMatchesTranslation) {
    const auto q = AnalyticSignal::quasi_periodic({0.5, 0.5}, {1.0, std::sqrt(2.0)});
    const HullElement omega(single_shear(q));
    for (double t : {0.0, 1.5, 37.25, 1000.0}) {
        const auto moved = drive(omega, t);
        for (double s : {0.0, 0.3, 2.0}) EXPECT_NEAR(moved.signal().scalar(s), q.scalar(s + t), 1e-12);
        EXPECT_NEAR(moved.forcing().norm_at(0.0), std::abs(q.scalar(t)), 1e-12);
        for (double p : moved.phases()) {
            EXPECT_GE(p, 0.0);
            EXPECT_LT(p, 2.0 * std::numbers::pi);
        }
    }
    EXPECT_NEAR(drive(drive(omega, 2.0), 3.0).parameter_distance(drive(omega, 5.0)), 0.0, 1e-12);
}

TEST(HullElement, PeriodicPhaseReturnsAfterOnePeriod) {
    const HullElement omega(single_shear(AnalyticSignal::periodic({1.0}, 1.0)));
    EXPECT_NEAR(drive(omega, 2.0 * std::numbers::pi).parameter_distance(omega), 0.0, 1e-12);
    EXPECT_NEAR(drive(omega, 1.0).parameter_distance(omega), 1.0, 1e-12);
}

TEST(HullElement, LineOffsetAccumulates) {
    const auto phi = AnalyticSignal::poisson_example();
    const HullElement omega(single_shear(phi));
    const auto moved = drive(omega, 44.0);
    EXPECT_DOUBLE_EQ(moved.offset(), 44.0);
    EXPECT_DOUBLE_EQ(moved.parameter_distance(omega), 44.0);
    EXPECT_NEAR(moved.signal().scalar(1.0), phi.scalar(45.0), 1e-15);
}

TEST(HullElement, DifferentGeneratorsAreNotComparable) {
    const HullElement a(single_shear(AnalyticSignal::periodic({1.0}, 1.0)));
    const HullElement b(single_shear(AnalyticSignal::poisson_example()));
    EXPECT_THROW(a.parameter_distance(b), InvalidArgument);
}

TEST(Cocycle, IdentityHoldsOnTheSolverGrid) {
    const HullElement omega(single_shear(AnalyticSignal::quasi_periodic({0.5, 0.5}, {1.0, std::sqrt(2.0)})));
    const nse2d::SolverConfig cfg{0.5, 16, 1e-3, true, 0.0, nse2d::Startup::heun, 0.0};
    const auto r = cocycle_check(nse2d::random_field(16, 3, 4), omega, cfg, 0.2, 0.3, 1e-8);
    EXPECT_TRUE(r.passed) << r.fiber_relative;
    EXPECT_LE(r.base_discrepancy, 1e-12);
    EXPECT_GT(r.fiber_norm, 0.0);
    EXPECT_THROW(cocycle_check(nse2d::random_field(16, 3, 4), omega, cfg, 0.2, 0.3005, 1e-8), InvalidArgument);
}

TEST(SkewTrajectory, BaseFollowsTheDrive) {
    const HullElement omega(single_shear(AnalyticSignal::periodic({1.0}, 1.0)));
    const nse2d::SolverConfig cfg{0.5, 16, 1e-2, true, 1.0, nse2d::Startup::heun, 0.0};
    const auto traj = skew_trajectory(nse2d::SpectralField(16), omega, cfg, 25);
    ASSERT_EQ(traj.states.size(), 5u);
    for (const auto& s : traj.states) EXPECT_NEAR(s.omega.parameter_distance(drive(omega, s.t)), 0.0, 1e-12);
    EXPECT_LE(traj.drive_drift, 1e-12);
}

TEST(Search, PeriodicForcingGivesARecurrentSolution) {
    const HullElement omega(single_shear(AnalyticSignal::periodic({1.0}, 1.0)));
    SearchParams p;
    p.solver = {1.0, 16, 1e-2, true, 0.0, nse2d::Startup::heun, 0.0};
    p.horizon = 60.0;
    p.burn_in = 20.0;
    p.window_T = 2.0;
    p.epsilon_ladder = {0.1, 0.05};
    const auto r = recurrent_solution_search(nse2d::random_field(16, 1, 3), omega, p);
    EXPECT_FALSE(r.inconclusive) << r.note;
    EXPECT_TRUE(r.joint_subset_of_base);
    EXPECT_TRUE(r.report.classification == recurrence::Classification::periodic ||
                r.report.classification == recurrence::Classification::recurrent_candidate)
        << recurrence::to_string(r.report.classification);
    ASSERT_EQ(r.evidence.size(), 2u);
    for (const auto& e : r.evidence) {
        ASSERT_TRUE(e.joint_inclusion_length.has_value());
        EXPECT_LE(*e.joint_inclusion_length, 2.0 * std::numbers::pi + 0.05);
    }
}

TEST(Search, LineHullIsNotARecurrentSearchTarget) {
    const HullElement omega(single_shear(AnalyticSignal::poisson_example()));
    SearchParams p;
    p.solver = {1.0, 16, 1e-2, true, 0.0, nse2d::Startup::heun, 0.0};
    p.horizon = 60.0;
    EXPECT_THROW(recurrent_solution_search(nse2d::SpectralField(16), omega, p), InvalidArgument);
}

TEST(Search, RejectsImpossibleWindows) {
    const HullElement omega(single_shear(AnalyticSignal::periodic({1.0}, 1.0)));
    SearchParams p;
    p.solver = {1.0, 16, 1e-2, true, 0.0, nse2d::Startup::heun, 0.0};
    p.horizon = 10.0;
    p.burn_in = 8.0;
    EXPECT_THROW(recurrent_solution_search(nse2d::SpectralField(16), omega, p), InvalidArgument);
}
