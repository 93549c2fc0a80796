#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "recurflow/funcspace.hpp"
#include "recurflow/spectral_field.hpp"

namespace recurflow::nse2d {

/// Start-up step used before the Adams-Bashforth history exists.
enum class Startup { euler, heun };

std::string_view to_string(Startup s);

struct SolverConfig {
    double nu = 0.1;
    int n = 64;
    double dt = 1e-3;
    bool dealias = true;
    double t_end = 1.0;
    Startup startup = Startup::heun;
    /// Abort when energy exceeds this; 0 selects 1e6 x (initial + forcing) energy scale.
    double energy_ceiling = 0.0;

    /// Throws InvalidArgument on bad values; returns advisory warnings.
    std::vector<std::string> validate() const;
    /// Number of steps to reach t_end (rounded to the nearest integer).
    std::size_t steps() const;
};

nlohmann::json to_json(const SolverConfig& cfg);

/// One Fourier mode of the forcing, F_hat(k) = amplitude * temporal[component](t).
/// The conjugate at -k is implied. Amplitudes are Leray-projected on construction.
struct ForcingMode {
    int kx = 0;
    int ky = 1;
    Complex amplitude[2] = {};
    std::size_t component = 0;

    ForcingMode() = default;
    ForcingMode(int kx, int ky, Complex ax, Complex ay, std::size_t component = 0);

    /// Real field sqrt(2) * a * e_perp * sin(k.x + phase), unit H-norm per unit a,
    /// with e_perp = (ky, -kx) / |k|. For k = (0, 1) this is (sqrt(2) a sin y, 0).
    static ForcingMode shear(int kx, int ky, double amplitude, std::size_t component = 0, double phase = 0.0);
};

/// F(t) = P F(t) = sum over modes of amplitude * temporal(t)[component] at +-k.
class ForcingField {
public:
    ForcingField();  ///< zero forcing
    ForcingField(std::vector<ForcingMode> modes, funcspace::AnalyticSignal temporal);

    const std::vector<ForcingMode>& modes() const { return modes_; }
    const funcspace::AnalyticSignal& temporal() const { return temporal_; }
    ForcingField with_temporal(funcspace::AnalyticSignal temporal) const;

    /// Overwrites `out` with F(t).
    void evaluate(double t, SpectralField& out) const;
    SpectralField evaluate(double t, int n) const;
    /// |F(t)|_H, computed from the mode Gram matrix without touching a grid.
    double norm_at(double t) const;
    /// |sum_i c_i e_i|_H for per-mode weights c (the temporal values).
    double norm_of_weights(std::span<const double> weights) const;
    /// Per-mode temporal values at t.
    void mode_weights(double t, std::span<double> out) const;
    /// Real coordinates whose Euclidean norm is |F(t)|_H: sqrt(2) (re, im) of
    /// both components at each distinct wavevector.
    std::size_t coordinate_dim() const { return 4 * wavevectors_; }
    void coordinates(double t, std::span<double> out) const;
    /// Throws if a mode does not fit on an n-grid.
    void check_grid(int n) const;

    nlohmann::json describe() const;

private:
    std::vector<ForcingMode> modes_;
    funcspace::AnalyticSignal temporal_;
    std::vector<double> gram_;  ///< row-major, modes x modes
    std::vector<std::size_t> slot_of_mode_;
    std::size_t wavevectors_ = 0;
};

/// Shear modes with relative weights, scaled so that unit temporal values give
/// a unit H-norm pattern. components[i] selects the temporal component of mode i
/// (all 0 when empty).
ForcingField shear_pattern(std::span<const std::array<int, 2>> modes, std::span<const double> weights,
                           funcspace::AnalyticSignal temporal, std::span<const std::size_t> components = {});

struct EnergyRecord {
    double t = 0.0;
    double energy = 0.0;
    double enstrophy = 0.0;
    double forcing_norm = 0.0;
};

/// Integrating-factor Adams-Bashforth 2 for u' + A u + B(u, u) = F(t).
///
/// Diffusion is integrated exactly through e^{-nu |k|^2 dt}; B and F are
/// explicit. One instance owns its FFT workspace and is confined to one thread.
class Solver {
public:
    Solver(SolverConfig cfg, ForcingField forcing);

    /// Sets the state and clock and clears the multistep history.
    void reset(const SpectralField& u0, double t0 = 0.0);
    void step();
    void advance(std::size_t steps);

    const SpectralField& state() const { return u_; }
    double time() const { return t0_ + static_cast<double>(steps_) * cfg_.dt; }
    std::size_t steps_taken() const { return steps_; }
    const SolverConfig& config() const { return cfg_; }
    const ForcingField& forcing() const { return forcing_; }

    EnergyRecord record() const;
    /// -B(u, u) + F(t), the explicit right-hand side.
    void explicit_rhs(const SpectralField& u, double t, SpectralField& out);
    BilinearEvaluator& bilinear() { return bilinear_; }

private:
    void check_finite() const;

    SolverConfig cfg_;
    ForcingField forcing_;
    BilinearEvaluator bilinear_;
    std::vector<double> decay_;  ///< e^{-nu |k|^2 dt} per slot
    SpectralField u_;
    SpectralField rhs_;
    SpectralField rhs_prev_;
    SpectralField scratch_;
    SpectralField forcing_scratch_;
    bool has_history_ = false;
    double t0_ = 0.0;
    std::size_t steps_ = 0;
};

struct Trajectory {
    SolverConfig config;
    nlohmann::json forcing;
    std::size_t stride = 1;
    std::vector<double> times;
    std::vector<SpectralField> states;
    std::vector<EnergyRecord> records;  ///< every step, including t0
};

struct SolveOptions {
    /// Keep every stride-th state (the first and last step included).
    std::size_t stride = 1;
    double t0 = 0.0;
};

/// Runs from u0 for cfg.steps() steps. Throws SolverError on non-finite
/// values or when energy crosses the ceiling.
Trajectory solve(const SpectralField& u0, const ForcingField& forcing, const SolverConfig& cfg,
                 const SolveOptions& options = {});

/// Energy ceiling used by solve when cfg.energy_ceiling is 0.
double auto_energy_ceiling(const SpectralField& u0, const ForcingField& forcing, const SolverConfig& cfg,
                           double t0 = 0.0);

struct TrajectoryFiles {
    std::filesystem::path manifest;
    std::filesystem::path binary;
    std::filesystem::path energy_csv;
};

/// Writes `<stem>.json` (manifest), `<stem>.bin` (little-endian complex
/// coefficients, sample-major then component, ix, iy) and `<stem>_energy.csv`.
TrajectoryFiles write_trajectory(const std::filesystem::path& dir, const std::string& stem, const Trajectory& traj,
                                 const nlohmann::json& extra = nlohmann::json::object());

/// Reads a trajectory back, verifying the binary checksum.
Trajectory read_trajectory(const std::filesystem::path& manifest);

std::string energy_csv(const std::vector<EnergyRecord>& records);

}  // namespace recurflow::nse2d
