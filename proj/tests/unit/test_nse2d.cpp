#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "recurflow/errors.hpp"
#include "recurflow/experiments.hpp"
#include "recurflow/io.hpp"
#include "recurflow/nse2d.hpp"

using namespace recurflow;
using namespace recurflow::nse2d;
using funcspace::AnalyticSignal;

namespace fs = std::filesystem;

namespace {

ForcingField two_mode_forcing(AnalyticSignal temporal) {
    const std::array<std::array<int, 2>, 2> modes = {{{0, 1}, {1, 1}}};
    const std::array<double, 2> weights = {1.0, 1.0};
    return shear_pattern(modes, weights, std::move(temporal));
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::path(RECURFLOW_TEST_SCRATCH) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(SolverConfig, ValidationNamesTheField) {
    SolverConfig cfg;
    cfg.dt = -0.1;
    cfg.nu = 0.0;
    try {
        cfg.validate();
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        ASSERT_EQ(e.problems().size(), 2u);
        EXPECT_NE(e.problems()[0].find("nu"), std::string::npos);
        EXPECT_NE(e.problems()[1].find("dt"), std::string::npos);
    }
    cfg = SolverConfig{};
    cfg.n = 48;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(SolverConfig, WarnsAboutRoundedStepCount) {
    SolverConfig cfg{0.1, 16, 0.3, true, 1.0, Startup::heun, 0.0};
    const auto warnings = cfg.validate();
    ASSERT_FALSE(warnings.empty());
    EXPECT_EQ(cfg.steps(), 3u);
}

TEST(Forcing, ShearModeHasUnitNormPerUnitAmplitude) {
    const auto f = ForcingField({ForcingMode::shear(2, 1, 1.0)}, AnalyticSignal::constant({3.0}));
    EXPECT_NEAR(f.norm_at(0.0), 3.0, 1e-15);
    EXPECT_NEAR(h_norm(f.evaluate(0.0, 16)), 3.0, 1e-14);
    EXPECT_LE(f.evaluate(0.0, 16).divergence_residual(), 1e-15);
}

TEST(Forcing, PatternCoordinatesCarryTheNorm) {
    const auto f = two_mode_forcing(AnalyticSignal::quasi_periodic({0.5, 0.5}, {1.0, std::sqrt(2.0)}));
    std::vector<double> c(f.coordinate_dim());
    for (double t : {0.0, 0.7, 3.1}) {
        f.coordinates(t, c);
        double sq = 0.0;
        for (double v : c) sq += v * v;
        EXPECT_NEAR(std::sqrt(sq), f.norm_at(t), 1e-14);
        EXPECT_NEAR(f.norm_at(t), h_norm(f.evaluate(t, 16)), 1e-14);
        EXPECT_NEAR(f.norm_at(t), std::abs(f.temporal().scalar(t)), 1e-14);
    }
}

TEST(Forcing, RejectsBadModes) {
    EXPECT_THROW(ForcingMode(0, 0, Complex(1.0), Complex(0.0)), InvalidArgument);
    const auto f = ForcingField({ForcingMode::shear(0, 9, 1.0)}, AnalyticSignal::constant({1.0}));
    EXPECT_THROW(f.check_grid(16), InvalidArgument);
    EXPECT_NO_THROW(f.check_grid(32));
    EXPECT_THROW(ForcingField({ForcingMode::shear(0, 1, 1.0, 1)}, AnalyticSignal::constant({1.0})), InvalidArgument);
}

TEST(Solver, KolmogorovDecayIsExact) {
    SolverConfig cfg{0.1, 32, 1e-3, true, 1.0, Startup::heun, 0.0};
    const auto traj = solve(kolmogorov_mode(32, 1.0), ForcingField(), cfg, {1000, 0.0});
    ASSERT_EQ(traj.states.size(), 2u);
    EXPECT_NEAR(kolmogorov_amplitude(traj.states.back()) / std::exp(-0.1), 1.0, 1e-12);
    EXPECT_EQ(traj.records.size(), 1001u);
}

TEST(Solver, ForcedKolmogorovIsSecondOrder) {
    const std::array<std::array<int, 2>, 1> modes = {{{0, 1}}};
    const std::array<double, 1> w = {1.0};
    const auto f = shear_pattern(modes, w, AnalyticSignal::periodic({1.0}, 1.0));
    std::vector<double> err;
    for (double dt : {0.02, 0.01}) {
        SolverConfig cfg{0.3, 16, dt, true, 2.0, Startup::heun, 0.0};
        Solver s(cfg, f);
        s.reset(kolmogorov_mode(16, 1.0));
        s.advance(cfg.steps());
        err.push_back(std::abs(kolmogorov_amplitude(s.state()) -
                               experiments::forced_kolmogorov_amplitude(1.0, 0.3, 1.0, s.time())));
    }
    EXPECT_GE(err[0] / err[1], 3.5);
}

TEST(Solver, ConstantForcingReachesStokesSteadyState) {
    const auto f = ForcingField({ForcingMode::shear(1, 2, 1.0)}, AnalyticSignal::constant({0.4}));
    SolverConfig cfg{1.0, 16, 1e-3, true, 10.0, Startup::heun, 0.0};
    Solver s(cfg, f);
    s.reset(SpectralField(16));
    s.advance(cfg.steps());
    // A single Fourier mode is an exact steady state of B, so u -> F / (nu |k|^2).
    auto expected = f.evaluate(0.0, 16);
    expected *= 1.0 / 5.0;
    EXPECT_LE(h_distance(s.state(), expected) / h_norm(expected), 1e-4);
}

TEST(Solver, BitReproducible) {
    const auto f = two_mode_forcing(AnalyticSignal::quasi_periodic({0.5, 0.5}, {1.0, std::sqrt(2.0)}));
    SolverConfig cfg{0.5, 32, 1e-2, true, 2.0, Startup::heun, 0.0};
    const auto u0 = random_field(32, 7, 5);
    const auto a = solve(u0, f, cfg, {50, 0.0});
    const auto b = solve(u0, f, cfg, {50, 0.0});
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) EXPECT_TRUE(a.states[i] == b.states[i]);
}

TEST(Solver, PreservesInvariants) {
    const auto f = two_mode_forcing(AnalyticSignal::periodic({1.0}, 2.0));
    SolverConfig cfg{0.2, 32, 5e-3, true, 1.0, Startup::euler, 0.0};
    const auto traj = solve(random_field(32, 3, 8), f, cfg, {200, 0.0});
    const auto& u = traj.states.back();
    EXPECT_LE(u.divergence_residual(), 1e-12);
    EXPECT_LE(u.hermitian_residual(), 1e-12);
    EXPECT_LE(u.mean_magnitude(), 1e-12);
}

TEST(Solver, EnergyCeilingAbortsWithTheTime) {
    const auto f = ForcingField({ForcingMode::shear(0, 1, 1.0)}, AnalyticSignal::constant({10.0}));
    SolverConfig cfg{0.1, 16, 1e-2, true, 5.0, Startup::heun, 1.0};
    try {
        solve(SpectralField(16), f, cfg);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_GT(e.time(), 0.0);
        EXPECT_LT(e.time(), 1.0);
    }
}

TEST(Solver, StrideMustDivideTheStepCount) {
    SolverConfig cfg{0.1, 16, 1e-2, true, 1.0, Startup::heun, 0.0};
    EXPECT_THROW(solve(SpectralField(16), ForcingField(), cfg, {7, 0.0}), InvalidArgument);
}

TEST(Solver, StartTimeShiftsTheForcingClock) {
    const auto f = ForcingField({ForcingMode::shear(0, 1, 1.0)}, AnalyticSignal::periodic({1.0}, 1.0));
    SolverConfig cfg{0.5, 16, 1e-2, true, 1.0, Startup::heun, 0.0};
    const auto a = solve(SpectralField(16), f, cfg, {100, 2.0});
    const auto shifted = ForcingField({ForcingMode::shear(0, 1, 1.0)}, AnalyticSignal::periodic({1.0}, 1.0).translate(2.0));
    const auto b = solve(SpectralField(16), shifted, cfg, {100, 0.0});
    EXPECT_DOUBLE_EQ(a.times.back(), 3.0);
    EXPECT_LE(h_distance(a.states.back(), b.states.back()), 1e-13);
}

TEST(Trajectory, RoundTripsThroughDisk) {
    const auto dir = scratch("trajectory");
    const auto f = two_mode_forcing(AnalyticSignal::periodic({0.5}, 1.0));
    SolverConfig cfg{0.5, 16, 1e-2, true, 0.5, Startup::heun, 0.0};
    const auto traj = solve(random_field(16, 2, 4), f, cfg, {10, 0.0});
    const auto files = write_trajectory(dir, "run", traj);
    const auto back = read_trajectory(files.manifest);
    ASSERT_EQ(back.states.size(), traj.states.size());
    for (std::size_t i = 0; i < traj.states.size(); ++i) EXPECT_TRUE(back.states[i] == traj.states[i]);
    EXPECT_EQ(back.times, traj.times);
    EXPECT_EQ(fs::file_size(files.binary), traj.states.size() * 2 * 16 * 9 * 16);

    const auto csv = io::read_text(files.energy_csv);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,energy,enstrophy,forcing_norm");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(traj.records.size() + 1));

    {
        std::fstream bin(files.binary, std::ios::in | std::ios::out | std::ios::binary);
        bin.seekp(100);
        bin.put('\x7f');
    }
    EXPECT_THROW(read_trajectory(files.manifest), Error);
}

TEST(Experiments, SolverVerifySuitePasses) {
    experiments::VerifyParams p;
    p.solver.n = 32;
    p.gronwall_horizon = 20.0;
    p.gronwall_dt = 2e-2;
    const auto r = experiments::solver_verify(p);
    EXPECT_TRUE(r.passed()) << experiments::text_summary(r);
    ASSERT_NE(r.find("kolmogorov_decay_relative_error"), nullptr);
    EXPECT_LE(r.find("kolmogorov_decay_relative_error")->value, 1e-6);
    EXPECT_EQ(r.find("no_such_check"), nullptr);
    const auto csv = experiments::verify_csv(r.rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "check,value,reference,tolerance,passed");
}

TEST(Experiments, ForcedKolmogorovClosedForm) {
    const double nu = 0.2;
    const double h = 1e-5;
    for (double t : {0.0, 0.5, 3.0}) {
        const double a = experiments::forced_kolmogorov_amplitude(1.5, nu, 0.7, t);
        const double da = (experiments::forced_kolmogorov_amplitude(1.5, nu, 0.7, t + h) -
                           experiments::forced_kolmogorov_amplitude(1.5, nu, 0.7, t - h)) /
                          (2.0 * h);
        EXPECT_NEAR(da, -nu * a + std::sqrt(2.0) * 0.7 * std::sin(t), 1e-8);
    }
    EXPECT_DOUBLE_EQ(experiments::forced_kolmogorov_amplitude(1.5, nu, 0.7, 0.0), 1.5);
}
