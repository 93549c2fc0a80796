#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "recurflow/errors.hpp"
#include "recurflow/funcspace.hpp"

using namespace recurflow;
using namespace recurflow::funcspace;

namespace {

AnalyticSignal random_signal(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> amp(-2.0, 2.0);
    std::uniform_real_distribution<double> freq(0.2, 3.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    switch (rng() % 3) {
    case 0: return AnalyticSignal::constant({amp(rng)});
    case 1: return AnalyticSignal::periodic({amp(rng)}, freq(rng), phase(rng));
    default: return AnalyticSignal::quasi_periodic({amp(rng), amp(rng)}, {freq(rng), freq(rng)}, {phase(rng), 0.0});
    }
}

}  // namespace

TEST(AnalyticSignal, EvaluatesClosedForms) {
    const auto p = AnalyticSignal::periodic({2.0}, 3.0, 0.5);
    EXPECT_DOUBLE_EQ(p.scalar(1.25), 2.0 * std::sin(3.0 * 1.25 + 0.5));

    const auto q = AnalyticSignal::quasi_periodic({1.0, 0.5}, {1.0, std::sqrt(2.0)});
    EXPECT_DOUBLE_EQ(q.scalar(0.7), std::sin(0.7) + 0.5 * std::sin(std::sqrt(2.0) * 0.7));

    const auto z = AnalyticSignal::poisson_example({0.3});
    EXPECT_DOUBLE_EQ(z.scalar(2.0), 0.3 / (2.0 + std::sin(2.0) + std::sin(std::numbers::pi * 2.0)));

    const auto c = AnalyticSignal::constant({1.0, -4.0});
    EXPECT_EQ(c.output_dim(), 2u);
    EXPECT_EQ(c(17.0), (std::vector<double>{1.0, -4.0}));
}

TEST(AnalyticSignal, TranslationIsAFlow) {
    const auto q = AnalyticSignal::quasi_periodic({1.0, 1.0}, {1.0, std::sqrt(2.0)});
    const auto a = q.translate(3.5).translate(-1.25);
    const auto b = q.translate(2.25);
    for (double t : {-7.0, 0.0, 0.3, 11.0}) {
        EXPECT_NEAR(a.scalar(t), b.scalar(t), 1e-14);
        EXPECT_NEAR(b.scalar(t), q.scalar(t + 2.25), 1e-14);
    }
    EXPECT_EQ(b.kind(), SignalKind::shifted);
    EXPECT_EQ(b.base_kind(), SignalKind::quasi_periodic);
    EXPECT_DOUBLE_EQ(q.translate(0.0).scalar(1.0), q.scalar(1.0));
}

TEST(AnalyticSignal, SupBound) {
    EXPECT_EQ(*AnalyticSignal::quasi_periodic({0.5, -0.5}, {1.0, 2.0})
                   .sup_bound(),
              std::vector<double>{1.0});
    EXPECT_FALSE(AnalyticSignal::poisson_example().sup_bound().has_value());
}

TEST(AnalyticSignal, RejectsMalformedParameters) {
    EXPECT_THROW(AnalyticSignal::constant({}), InvalidArgument);
    EXPECT_THROW(AnalyticSignal::quasi_periodic({1.0, 1.0, 1.0}, {1.0, 2.0}), InvalidArgument);
    EXPECT_THROW(AnalyticSignal::quasi_periodic({1.0}, {}), InvalidArgument);
}

TEST(AnalyticSignal, FlagsRationallyDependentFrequencies) {
    EXPECT_FALSE(AnalyticSignal::quasi_periodic({1.0, 1.0}, {1.0, 1.5}).rational_dependence_warnings().empty());
    EXPECT_TRUE(
        AnalyticSignal::quasi_periodic({1.0, 1.0}, {1.0, std::sqrt(2.0)}).rational_dependence_warnings().empty());
}

TEST(SignalKindNames, RoundTrip) {
    for (auto k : {SignalKind::constant, SignalKind::periodic, SignalKind::quasi_periodic,
                   SignalKind::poisson_example}) {
        EXPECT_EQ(parse_signal_kind(to_string(k)), k);
    }
    EXPECT_FALSE(parse_signal_kind("sawtooth").has_value());
}

TEST(SampledPath, InterpolatesAndReportsCoverage) {
    SampledPath path(TimeGrid(0.0, 0.5, 5), {{0.0}, {1.0}, {4.0}, {9.0}, {16.0}});
    std::vector<double> out(1);
    path.evaluate(0.75, out);
    EXPECT_DOUBLE_EQ(out[0], 2.5);
    const PathView view(path);
    EXPECT_NO_THROW(view.require(0.0, 2.0));
    EXPECT_THROW(view.require(-0.1, 1.0), CoverageError);
    try {
        view.require(1.0, 3.0);
        FAIL() << "expected CoverageError";
    } catch (const CoverageError& e) {
        EXPECT_DOUBLE_EQ(e.missing_hi(), 3.0);
    }
}

TEST(StateDistance, Norms) {
    const std::vector<double> a = {3.0, 0.0};
    const std::vector<double> b = {0.0, 4.0};
    EXPECT_DOUBLE_EQ(state_distance(a, b, StateNorm::euclidean), 5.0);
    EXPECT_DOUBLE_EQ(state_distance(a, b, StateNorm::max_abs), 4.0);
}

TEST(CompactOpenMetric, ConstantsZeroAndOne) {
    const auto zero = AnalyticSignal::constant({0.0});
    const auto one = AnalyticSignal::constant({1.0});
    const auto d = compact_open_distance(zero, one, {20, 64, 0.0});
    EXPECT_NEAR(d.value, 0.5 * (1.0 - std::ldexp(1.0, -20)), 1e-15);
    EXPECT_DOUBLE_EQ(d.truncation_bound, std::ldexp(1.0, -20));
    EXPECT_EQ(d.level_seminorms.size(), 20u);
}

TEST(CompactOpenMetric, SeminormMatchesOracle) {
    const auto f = AnalyticSignal::periodic({1.0}, 1.0);
    const auto g = AnalyticSignal::periodic({1.0}, 1.0, 0.1);
    const double d3 = seminorm_dn(f, g, 3, 64);
    EXPECT_NEAR(d3, 0.09995785046392895, 1e-15);
    // A grid max never exceeds the dense sup.
    EXPECT_LE(d3, 0.09995833852136499);
}

TEST(CompactOpenMetric, PoissonExampleAgainstItsShift) {
    const auto phi = AnalyticSignal::poisson_example();
    const auto d = compact_open_distance(phi, phi.translate(44.0), {5, 64, 0.0});
    EXPECT_NEAR(d.value, 0.0636676967594956, 1e-13);
}

TEST(CompactOpenMetric, AxiomsOnRandomTriples) {
    std::mt19937_64 rng(2024);
    const CompactOpenMetricParams params{8, 32, 0.0};
    for (int i = 0; i < 100; ++i) {
        const auto f = random_signal(rng);
        const auto g = random_signal(rng);
        const auto h = random_signal(rng);
        const double fg = compact_open_distance(f, g, params).value;
        const double gf = compact_open_distance(g, f, params).value;
        const double gh = compact_open_distance(g, h, params).value;
        const double fh = compact_open_distance(f, h, params).value;
        EXPECT_EQ(compact_open_distance(f, f, params).value, 0.0);
        EXPECT_NEAR(fg, gf, 1e-12);
        EXPECT_LE(fh, fg + gh + 1e-12);
        EXPECT_GE(fg, 0.0);
        EXPECT_LT(fg, 1.0);
    }
}

TEST(CompactOpenMetric, CenterShiftsTheWindow) {
    const auto phi = AnalyticSignal::poisson_example();
    const auto shifted = phi.translate(10.0);
    EXPECT_NEAR(seminorm_dn(phi, phi, 2, 64, 10.0), 0.0, 0.0);
    EXPECT_NEAR(seminorm_dn(shifted, phi.translate(20.0), 2, 64, 0.0), seminorm_dn(phi, phi.translate(10.0), 2, 64, 10.0),
                1e-14);
}

TEST(SymmetricOffsets, Grid) {
    const auto o = symmetric_offsets(2.0, 4);
    ASSERT_EQ(o.size(), 17u);
    EXPECT_DOUBLE_EQ(o.front(), -2.0);
    EXPECT_DOUBLE_EQ(o.back(), 2.0);
    EXPECT_DOUBLE_EQ(o[8], 0.0);
}
