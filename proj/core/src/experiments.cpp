#include "recurflow/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "recurflow/errors.hpp"
#include "recurflow/io.hpp"

namespace recurflow::experiments {

namespace {

using json = nlohmann::json;
using funcspace::AnalyticSignal;
using nse2d::SpectralField;

constexpr std::array<std::array<int, 2>, 1> kShearMode = {{{0, 1}}};
constexpr std::array<double, 1> kUnitWeight = {1.0};

nse2d::ForcingField single_shear(AnalyticSignal temporal) {
    return nse2d::shear_pattern(kShearMode, kUnitWeight, std::move(temporal));
}

VerifyRow below(std::string check, double value, double tolerance, std::string detail = {}) {
    return {std::move(check), value, 0.0, tolerance, value <= tolerance, std::move(detail)};
}

VerifyRow at_least(std::string check, double value, double minimum, std::string detail = {}) {
    return {std::move(check), value, minimum, 0.0, value >= minimum, std::move(detail)};
}

double relative(double value, double reference) { return std::abs(value - reference) / std::abs(reference); }

double invariant_residual(const SpectralField& u) {
    return std::max({u.divergence_residual(), u.hermitian_residual(), u.mean_magnitude()});
}

}  // namespace

double forced_kolmogorov_amplitude(double a0, double nu, double s, double t) {
    const double c = std::sqrt(2.0) * s / (nu * nu + 1.0);
    const double particular = c * (nu * std::sin(t) - std::cos(t));
    return particular + (a0 + c) * std::exp(-nu * t);
}

SpectralField random_field_with_energy(int n, std::uint64_t seed, int kmax, double target) {
    auto u = nse2d::random_field(n, seed, kmax);
    const double e = nse2d::energy(u);
    if (e > 0.0) u *= std::sqrt(target / e);
    return u;
}

bool VerifyResult::passed() const {
    return std::all_of(rows.begin(), rows.end(), [](const VerifyRow& r) { return r.passed; });
}

const VerifyRow* VerifyResult::find(const std::string& check) const {
    for (const auto& r : rows) {
        if (r.check == check) return &r;
    }
    return nullptr;
}

VerifyResult solver_verify(const VerifyParams& p) {
    p.solver.validate();
    if (p.dt_ladder.size() < 2) throw InvalidArgument("dt_ladder needs at least two step sizes");
    VerifyResult out;
    const double a = p.kolmogorov_amplitude;
    const double nu = p.solver.nu;
    const int n = p.solver.n;
    const double t_end = p.solver.t_end;

    // Unforced Kolmogorov decay: B(u, u) = 0 and the integrating factor is exact.
    out.kolmogorov = nse2d::solve(nse2d::kolmogorov_mode(n, a), nse2d::ForcingField(), p.solver,
                                  {std::gcd(p.kolmogorov_stride, p.solver.steps()), 0.0});
    const double exact = a * std::exp(-nu * t_end);
    out.rows.push_back(below("kolmogorov_decay_relative_error",
                             relative(nse2d::kolmogorov_amplitude(out.kolmogorov.states.back()), exact),
                             p.decay_tolerance, fmt::format("a = {}, nu = {}, t = {}, dt = {}", a, nu, t_end, p.solver.dt)));
    out.rows.push_back(below("kolmogorov_invariants", invariant_residual(out.kolmogorov.states.back()), 1e-12));

    std::vector<double> unforced;
    std::vector<double> forced;
    const auto forcing = single_shear(AnalyticSignal::periodic({1.0}, 1.0));
    for (double dt : p.dt_ladder) {
        auto cfg = p.solver;
        cfg.dt = dt;
        nse2d::Solver free_run(cfg, nse2d::ForcingField());
        free_run.reset(nse2d::kolmogorov_mode(n, a));
        free_run.advance(cfg.steps());
        unforced.push_back(std::abs(nse2d::kolmogorov_amplitude(free_run.state()) - exact));

        nse2d::Solver driven(cfg, forcing);
        driven.reset(nse2d::kolmogorov_mode(n, a));
        driven.advance(cfg.steps());
        forced.push_back(std::abs(nse2d::kolmogorov_amplitude(driven.state()) -
                                  forced_kolmogorov_amplitude(a, nu, 1.0, free_run.time())));
    }
    for (std::size_t k = 0; k < p.dt_ladder.size(); ++k) {
        out.rows.push_back(below(fmt::format("kolmogorov_decay_error_dt={}", p.dt_ladder[k]), unforced[k] / exact,
                                 p.decay_tolerance, "unforced; roundoff level, so no order is measurable"));
    }
    for (std::size_t k = 0; k + 1 < p.dt_ladder.size(); ++k) {
        out.rows.push_back(at_least(fmt::format("forced_kolmogorov_order_ratio_dt={}", p.dt_ladder[k + 1]),
                                    forced[k] / forced[k + 1], p.min_order_ratio,
                                    fmt::format("errors {} -> {}", io::fmt17(forced[k]), io::fmt17(forced[k + 1]))));
    }

    // Energy balance per step: the first-step residual against the energy identity shrinks as dt^2.
    {
        const auto u0 = random_field_with_energy(32, p.seed, 4, 0.25);
        const std::array<std::array<int, 2>, 2> modes = {{{0, 1}, {1, 1}}};
        const std::array<double, 2> weights = {1.0, 1.0};
        const auto f = nse2d::shear_pattern(modes, weights,
                                            AnalyticSignal::quasi_periodic({0.5, 0.5}, {1.0, std::sqrt(2.0)}));
        const double rate =
            -2.0 * nu * nse2d::enstrophy(u0) + nse2d::inner(f.evaluate(0.0, 32), u0);
        std::vector<double> residual;
        for (double dt : {p.dt_ladder[0], p.dt_ladder[1]}) {
            nse2d::SolverConfig cfg{nu, 32, dt, true, dt, p.solver.startup, 0.0};
            nse2d::Solver s(cfg, f);
            s.reset(u0);
            s.step();
            residual.push_back(std::abs(nse2d::energy(s.state()) - nse2d::energy(u0) - dt * rate));
        }
        out.rows.push_back(at_least("energy_balance_order_ratio", residual[0] / residual[1], p.min_order_ratio,
                                    fmt::format("residuals {} -> {}", io::fmt17(residual[0]), io::fmt17(residual[1]))));
    }

    // Single-mode constant forcing relaxes to g / nu.
    {
        const double g = p.steady_amplitude;
        const auto f = single_shear(AnalyticSignal::constant({g}));
        nse2d::SolverConfig cfg{1.0, 16, p.steady_dt, true, p.steady_time, p.solver.startup, 0.0};
        nse2d::Solver s(cfg, f);
        s.reset(SpectralField(16));
        s.advance(cfg.steps());
        const auto target = f.evaluate(0.0, 16).at(0, 0, 1) / cfg.nu;
        out.rows.push_back(below("steady_single_mode_relative_error",
                                 std::abs(s.state().at(0, 0, 1) - target) / std::abs(target), p.steady_tolerance,
                                 fmt::format("g = {}, nu = 1, t = {}", g, p.steady_time)));
    }

    // Zero stays zero.
    {
        nse2d::SolverConfig cfg{nu, 16, p.solver.dt, true, 100 * p.solver.dt, p.solver.startup, 0.0};
        nse2d::Solver s(cfg, nse2d::ForcingField());
        s.reset(SpectralField(16));
        s.advance(cfg.steps());
        out.rows.push_back(below("zero_state_stays_zero", nse2d::h_norm(s.state()), 0.0));
    }

    // Dissipativity: without forcing the energy never increases.
    {
        nse2d::SolverConfig cfg{nu, 32, 1e-2, true, 5.0, p.solver.startup, 0.0};
        const auto traj = nse2d::solve(random_field_with_energy(32, p.seed + 1, 8, 1.0), nse2d::ForcingField(), cfg);
        double worst = 0.0;
        for (std::size_t k = 1; k < traj.records.size(); ++k) {
            worst = std::max(worst, (traj.records[k].energy - traj.records[k - 1].energy) / traj.records[k - 1].energy);
        }
        out.rows.push_back(below("unforced_energy_increase", worst, 1e-14, "largest relative step-to-step increase"));
    }

    if (p.gronwall) {
        const double gnu = p.gronwall_nu;
        const auto f = single_shear(AnalyticSignal::quasi_periodic({0.5, 0.5}, {1.0, std::sqrt(2.0)}));
        nse2d::SolverConfig cfg{gnu, n, p.gronwall_dt, true, p.gronwall_horizon, p.solver.startup, 0.0};
        const auto u0 = random_field_with_energy(n, p.seed + 2, 6, p.gronwall_initial_energy);
        const auto traj = nse2d::solve(u0, f, cfg, {cfg.steps(), 0.0});
        out.gronwall_records = traj.records;

        const double g = *f.temporal().sup_bound()->data();
        const double e0 = traj.records.front().energy;
        double margin = -std::numeric_limits<double>::infinity();
        double t_worst = 0.0;
        double poincare = 0.0;
        double invariants = invariant_residual(traj.states.back());
        for (const auto& r : traj.records) {
            const double bound = std::exp(-2.0 * gnu * r.t) * e0 + 0.5 * (g / gnu) * (g / gnu) * (1.0 + p.gronwall_slack);
            if (r.energy - bound > margin) {
                margin = r.energy - bound;
                t_worst = r.t;
            }
            poincare = std::max(poincare, r.energy - r.enstrophy);
        }
        out.rows.push_back(below("energy_inequality_margin", margin, 0.0,
                                 fmt::format("max of energy(t) - bound(t) over [0, {}], at t = {}; sup |F| = {}",
                                             p.gronwall_horizon, t_worst, g)));
        out.rows.push_back(below("poincare_energy_minus_enstrophy", poincare, 0.0));
        out.rows.push_back(below("forced_run_invariants", invariants, 1e-12));
    }
    return out;
}

std::string verify_csv(const std::vector<VerifyRow>& rows) {
    std::string out = "check,value,reference,tolerance,passed\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{}\n", r.check, io::fmt17(r.value), io::fmt17(r.reference),
                           io::fmt17(r.tolerance), r.passed ? "true" : "false");
    }
    return out;
}

nlohmann::json to_json(const VerifyResult& result) {
    json rows = json::array();
    for (const auto& r : result.rows) {
        rows.push_back(json{{"check", r.check},
                            {"value", r.value},
                            {"reference", r.reference},
                            {"tolerance", r.tolerance},
                            {"passed", r.passed},
                            {"detail", r.detail}});
    }
    return json{{"passed", result.passed()}, {"checks", rows}};
}

std::string text_summary(const VerifyResult& result) {
    std::string out;
    for (const auto& r : result.rows) {
        out += fmt::format("{:<44} {:<6} {}{}\n", r.check, r.passed ? "pass" : "FAIL", io::fmt17(r.value),
                           r.detail.empty() ? std::string() : "  (" + r.detail + ")");
    }
    out += fmt::format("overall: {}\n", result.passed() ? "pass" : "FAIL");
    return out;
}

}  // namespace recurflow::experiments
