#pragma once

// The Navier-Stokes cocycle over the forcing hull and the skew-product flow
// pi(t, u, omega) = (phi(t, u, omega), sigma_t omega), plus the long-run
// experiments that look for recurrent and Poisson stable solutions.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "recurflow/funcspace.hpp"
#include "recurflow/nse2d.hpp"
#include "recurflow/recurrence.hpp"

namespace recurflow::skewprod {

/// point: constant generator; torus: phases of a (quasi-)periodic generator;
/// line: time offset of any other generator.
enum class HullKind { point, torus, line };

std::string_view to_string(HullKind kind);

/// A point omega of the hull of the forcing, in parametric form.
///
/// Torus elements carry one phase per frequency, reduced to [0, 2 pi); line
/// elements carry a time offset. The generator is shared between copies.
class HullElement {
public:
    /// The single point of the zero-forcing hull.
    HullElement();
    /// The generator itself (zero offset, generator phases).
    explicit HullElement(nse2d::ForcingField generator);

    HullKind kind() const { return kind_; }
    const nse2d::ForcingField& generator() const { return *generator_; }
    std::span<const double> phases() const { return phases_; }
    double offset() const { return offset_; }

    /// Temporal signal of this element: omega(t) = generator(t + offset).
    funcspace::AnalyticSignal signal() const;
    /// Forcing field whose temporal part is signal().
    nse2d::ForcingField forcing() const;

    /// Largest circular phase difference (torus) or offset difference (line).
    double parameter_distance(const HullElement& other) const;

    /// Structural statement about the closure of the orbit.
    bool compact_minimal() const { return kind_ != HullKind::line; }

    nlohmann::json to_json() const;

private:
    friend HullElement drive(const HullElement& omega, double t);

    std::shared_ptr<const nse2d::ForcingField> generator_;
    HullKind kind_ = HullKind::point;
    std::vector<double> phases_;
    double offset_ = 0.0;
};

/// sigma_t omega.
HullElement drive(const HullElement& omega, double t);

struct CocycleState {
    nse2d::SpectralField u;
    HullElement omega;
    double t = 0.0;
};

struct SkewTrajectory {
    std::vector<CocycleState> states;
    std::vector<nse2d::EnergyRecord> records;
    /// Max over checkpoints (every 1000 steps) of |drive(omega0, t)(0) - omega0(t)|.
    double drive_drift = 0.0;
};

/// Fiber by nse2d::solve with the forcing of omega0, base by drive; sampled every stride steps.
SkewTrajectory skew_trajectory(const nse2d::SpectralField& u0, const HullElement& omega0,
                               const nse2d::SolverConfig& cfg, std::size_t stride = 1);

struct CocycleReport {
    double t = 0.0;
    double tau = 0.0;
    double tolerance = 0.0;
    double fiber_discrepancy = 0.0;  ///< |phi(t + tau, u, w) - phi(t, phi(tau, u, w), sigma_tau w)|_H
    double fiber_norm = 0.0;         ///< |phi(t + tau, u, w)|_H
    double fiber_relative = 0.0;
    double base_discrepancy = 0.0;
    bool passed = false;
};

/// Both sides of the cocycle identity on the solver grid; passes iff the
/// relative fiber discrepancy is <= tol. t and tau must be multiples of cfg.dt.
CocycleReport cocycle_check(const nse2d::SpectralField& u0, const HullElement& omega0, const nse2d::SolverConfig& cfg,
                            double t, double tau, double tol);

nlohmann::json to_json(const CocycleReport& report);

struct SearchParams {
    nse2d::SolverConfig solver;  ///< t_end is replaced by horizon
    double horizon = 1500.0;
    double burn_in = 10.0;
    std::vector<double> epsilon_ladder = {0.5, 0.2, 0.1, 0.05, 0.02, 0.01};
    /// Solutions are compared over [burn_in, burn_in + 2 window_T].
    double window_T = 5.0;
    double tau_min = 1.0;
    /// 0 means horizon - burn_in - 2 window_T.
    double tau_max = 0.0;
    /// 0 means solver dt; must be a multiple of dt.
    double tau_step = 0.0;
    /// Spacing of the fiber comparison grid; a multiple of dt.
    double compare_step = 0.1;
    /// Sampling density of the base comparison over [0, burn_in + 2 window_T].
    int base_samples_per_unit = 100;
    /// Empty means {horizon / 4, horizon / 2, horizon}.
    std::vector<double> boundedness_horizons;
    double growth_factor = 1.5;
    double omega_epsilon = 0.2;
    double omega_step = 1.0;
};

/// Echo of a search configuration.
nlohmann::json to_json(const SearchParams& params);

struct BaseReturn {
    double tau = 0.0;
    double base_sup = 0.0;
    /// Fiber sup at tau; empty when the fiber comparison aborted above the coarsest epsilon.
    std::optional<double> fiber_sup;
};

struct EpsilonJointEvidence {
    double epsilon = 0.0;
    recurrence::ShiftSet base;
    recurrence::ShiftSet joint;
    std::optional<double> base_inclusion_length;
    std::optional<double> joint_inclusion_length;
    std::vector<BaseReturn> base_returns;
    std::size_t fiber_near_returns = 0;  ///< base returns whose fiber sup is also < epsilon
};

struct SearchResult {
    /// Classification of the post-transient pair (u, omega) from its joint shifts.
    recurrence::RecurrenceReport report;
    std::vector<EpsilonJointEvidence> evidence;
    recurrence::OmegaLimitSample omega_limit;
    HullElement omega0;
    bool inconclusive = false;
    bool fixed_point = false;
    bool joint_subset_of_base = true;
    std::string note;
    double enstrophy_sup = 0.0;
    double forcing_sup = 0.0;
    /// Post-burn-in reference segment at compare_step spacing, records every step.
    nse2d::Trajectory segment;
    /// Whole run, one record every compare_step.
    std::vector<nse2d::EnergyRecord> series;
    std::optional<double> failure_time;  ///< set when the solver stopped early
};

/// Runs the skew trajectory to the horizon and measures the base and the
/// joint epsilon-shift sets of the post-transient solution.
SearchResult joint_search(const nse2d::SpectralField& u0, const HullElement& omega0, const SearchParams& params,
                          bool detect_period);

/// Search for a recurrent solution under (quasi-)periodic forcing.
SearchResult recurrent_solution_search(const nse2d::SpectralField& u0, const HullElement& omega0,
                                       const SearchParams& params);

struct PoissonSearchParams {
    SearchParams search;
    double check_epsilon = 0.05;
    double enstrophy_bound = 1e6;
    double forcing_bound = 1e4;
    /// Return times of the bare generator shape, checked with the recurrence module.
    double generator_epsilon = 0.1;
    double generator_window_T = 5.0;
    double generator_horizon = 100.0;
    double generator_tau_step = 1.0 / 1024.0;
};

struct PoissonSearchResult {
    SearchResult search;
    bool forcing_within_bound = false;
    bool enstrophy_within_bound = false;
    bool enstrophy_growth_ok = false;
    bool weakly_regular = false;
    bool hypothesis_violated = false;
    std::vector<double> enstrophy_at_returns;
    std::vector<recurrence::ReturnTime> generator_returns;
    std::size_t base_returns_at_check = 0;
    std::size_t fiber_near_returns_at_check = 0;
    bool near_returns_found = false;
};

/// Positive-direction Poisson stability evidence under a non-recurrent generator.
PoissonSearchResult poisson_stable_solution_search(const nse2d::SpectralField& u0, const HullElement& omega0,
                                                   const PoissonSearchParams& params);

nlohmann::json to_json(const SearchResult& result);
nlohmann::json to_json(const PoissonSearchResult& result);
std::string text_summary(const SearchResult& result);
std::string text_summary(const PoissonSearchResult& result);

}  // namespace recurflow::skewprod
