#pragma once

// Solver verification suite: analytic and ODE oracles for the Navier-Stokes
// solver, shared by the command-line runner and the test suite.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recurflow/nse2d.hpp"

namespace recurflow::experiments {

struct VerifyRow {
    std::string check;
    double value = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string detail;
};

struct VerifyParams {
    /// Kolmogorov decay case: u0 = (a sin y, 0), zero forcing.
    nse2d::SolverConfig solver{0.1, 64, 1e-3, true, 1.0, nse2d::Startup::heun, 0.0};
    double kolmogorov_amplitude = 1.0;
    /// States kept every this many steps in the decay trajectory.
    std::size_t kolmogorov_stride = 100;
    double decay_tolerance = 1e-6;
    /// Convergence ladder for the forced Kolmogorov case (AB2 active).
    std::vector<double> dt_ladder = {1e-2, 5e-3, 2.5e-3};
    double min_order_ratio = 1.9;
    /// Constant single-mode forcing g at |k| = 1, nu = 1, run to steady_time.
    double steady_amplitude = 0.5;
    double steady_time = 20.0;
    double steady_dt = 1e-2;
    double steady_tolerance = 1e-4;
    /// Energy inequality under quasi-periodic single-mode forcing with sup |F| = 1.
    bool gronwall = true;
    double gronwall_horizon = 200.0;
    double gronwall_dt = 1e-2;
    double gronwall_nu = 1.0;
    double gronwall_initial_energy = 0.25;
    double gronwall_slack = 0.05;
    std::uint64_t seed = 1;
};

struct VerifyResult {
    std::vector<VerifyRow> rows;
    /// The Kolmogorov decay run; records every step, states every kolmogorov_stride steps.
    nse2d::Trajectory kolmogorov;
    /// Energy records of the energy-inequality run.
    std::vector<nse2d::EnergyRecord> gronwall_records;

    bool passed() const;
    const VerifyRow* find(const std::string& check) const;
};

VerifyResult solver_verify(const VerifyParams& params);

/// a(t) for a' = -nu a + sqrt(2) s sin(t), a(0) = a0: Kolmogorov flow under
/// the unit shear pattern at k = (0, 1) with temporal signal s sin t.
double forced_kolmogorov_amplitude(double a0, double nu, double s, double t);

/// Random field rescaled to the requested energy.
nse2d::SpectralField random_field_with_energy(int n, std::uint64_t seed, int kmax, double energy);

/// CSV with header `check,value,reference,tolerance,passed`.
std::string verify_csv(const std::vector<VerifyRow>& rows);
nlohmann::json to_json(const VerifyResult& result);
std::string text_summary(const VerifyResult& result);

}  // namespace recurflow::experiments
