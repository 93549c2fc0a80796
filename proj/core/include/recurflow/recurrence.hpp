#pragma once

// Finite-horizon evidence for the recurrence taxonomy: epsilon-shift sets,
// inclusion lengths, Poisson return times, omega-limit samples, boundedness
// scans and an equicontinuity probe. Every statement these produce is a
// "candidate" statement tied to the scanned window, which the reports carry.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "recurflow/funcspace.hpp"

namespace recurflow::recurrence {

using funcspace::PathView;

/// two_sided compares over [-T, T]; one_sided over [0, 2T] (forward-only data).
enum class WindowMode { two_sided, one_sided };

std::string_view to_string(WindowMode mode);

struct ShiftScanParams {
    double epsilon = 0.1;
    double window_T = 5.0;
    double tau_min = 0.0;
    double tau_max = 10.0;
    double tau_step = 0.01;
    int samples_per_unit = 64;
    WindowMode window = WindowMode::two_sided;
};

struct ShiftSet {
    double epsilon = 0.0;
    double window_T = 0.0;
    double tau_min = 0.0;
    double tau_max = 0.0;
    double tau_step = 0.0;
    int samples_per_unit = 0;
    WindowMode window = WindowMode::two_sided;
    /// Ascending; windowed_sup[i] belongs to shifts[i] and is < epsilon.
    std::vector<double> shifts;
    std::vector<double> windowed_sup;
};

/// Windowed sup of rho(phi(t + tau), phi(t)) over a fixed window grid.
///
/// Reference values are cached, and the window is visited coarse-to-fine so
/// that scans with an abort threshold usually stop after a few points.
class WindowedSup {
public:
    WindowedSup(const PathView& phi, double window_T, int samples_per_unit, WindowMode mode);

    /// Exact sup when it stays below abort_at; otherwise some value >= abort_at.
    double operator()(double tau, double abort_at = std::numeric_limits<double>::infinity()) const;

    double window_lo() const { return times_.front(); }
    double window_hi() const { return times_.back(); }

private:
    const PathView& phi_;
    std::vector<double> times_;
    std::vector<std::size_t> order_;
    std::vector<std::vector<double>> reference_;
    mutable std::vector<double> scratch_;
};

/// Grid tau_k = tau_min + k tau_step, k = 0 .. floor((tau_max - tau_min) / tau_step).
std::vector<double> tau_grid(double tau_min, double tau_max, double tau_step);

ShiftSet shift_set(const PathView& phi, const ShiftScanParams& params);

/// Largest gap between consecutive shifts, range endpoints included.
/// Empty when the set is empty or the gap is the whole range.
std::optional<double> inclusion_length(const ShiftSet& set);

struct ReturnTime {
    double tau = 0.0;
    double windowed_sup = 0.0;
};

struct ReturnScanParams {
    double epsilon = 0.1;
    double window_T = 5.0;
    double horizon = 100.0;
    double tau_step = 0.01;
    int samples_per_unit = 64;
    WindowMode window = WindowMode::two_sided;
};

/// Near-return times t_n in (0, horizon]: one per excursion back into the
/// epsilon-ball, at the grid point of smallest windowed sup. The run of
/// trivially small shifts adjacent to tau = 0 is skipped.
std::vector<ReturnTime> poisson_return_times(const PathView& phi, const ReturnScanParams& params);

/// Same clustering as poisson_return_times over precomputed (tau, sup) pairs.
/// Consecutive grid indices form one excursion.
std::vector<ReturnTime> returns_from_scan(std::span<const double> taus, std::span<const double> sups,
                                          double epsilon, bool skip_initial_run);

struct BoundednessPoint {
    double horizon = 0.0;
    double sup = 0.0;
};

/// Grid max of |phi| over [0, h] for each horizon h (strictly increasing).
std::vector<BoundednessPoint> boundedness_scan(const PathView& phi, std::span<const double> horizons,
                                               int samples_per_unit = 64);

/// last sup <= growth_factor * first sup.
bool passes_growth_test(std::span<const BoundednessPoint> scan, double growth_factor);

struct OmegaLimitCluster {
    std::size_t representative = 0;  ///< index of the first state that opened the ball
    double representative_time = 0.0;
    std::vector<double> visit_times;  ///< every post-burn-in sample assigned to the ball
    std::vector<double> entry_times;  ///< samples where the trajectory re-entered the ball
};

struct OmegaLimitSample {
    double epsilon = 0.0;
    double burn_in = 0.0;
    std::size_t clusters_total = 0;
    /// Clusters visited at least twice.
    std::vector<OmegaLimitCluster> states;
};

using IndexDistance = std::function<double(std::size_t, std::size_t)>;

/// Streaming greedy first-fit clustering; callers keep only the representatives.
class OmegaLimitBuilder {
public:
    OmegaLimitBuilder(double epsilon, double burn_in);

    /// Assigns sample `index` at `time`. distance_to(c) is the distance from the
    /// sample to the representative of cluster c. Returns the cluster, or empty
    /// for samples inside the burn-in.
    std::optional<std::size_t> add(std::size_t index, double time,
                                   const std::function<double(std::size_t)>& distance_to);
    std::size_t clusters() const { return clusters_.size(); }
    std::size_t representative(std::size_t c) const { return clusters_[c].representative; }
    OmegaLimitSample finish() const;

private:
    double epsilon_;
    double burn_in_;
    std::vector<OmegaLimitCluster> clusters_;
    std::optional<std::size_t> previous_;
};

/// Greedy first-fit clustering of the samples with time > burn_in into
/// epsilon-balls around the first sample that opened each ball.
OmegaLimitSample omega_limit_sample(std::span<const double> times, const IndexDistance& distance, double epsilon,
                                    double burn_in);
OmegaLimitSample omega_limit_sample(const funcspace::SampledPath& path, double epsilon, double burn_in);

struct EquicontinuityParams {
    double epsilon = 0.1;
    double window_T = 5.0;
    double horizon = 50.0;
    double scan_step = 0.5;
    int samples_per_unit = 64;
};

struct EquicontinuityPair {
    std::size_t first = 0;
    std::size_t second = 0;
    double initial = 0.0;
    double worst = 0.0;  ///< max over scanned t of the distance between the translates
};

struct EquicontinuityRow {
    double delta = 0.0;
    std::size_t pairs = 0;
    std::optional<double> modulus;  ///< empty when no pair starts closer than delta
};

struct EquicontinuityReport {
    EquicontinuityParams params;
    std::vector<EquicontinuityPair> pairs;
    std::vector<EquicontinuityRow> rows;
    std::optional<double> delta_for_epsilon;
    bool passed = false;
    double expansion_factor = 0.0;
};

EquicontinuityReport equicontinuity_probe(std::span<const PathView> hull_samples, std::span<const double> deltas,
                                          const EquicontinuityParams& params);

enum class Classification {
    periodic,
    almost_periodic_candidate,
    recurrent_candidate,
    poisson_stable_positive_candidate,
    unclassified,
};

std::string_view to_string(Classification c);

struct ClassifyParams {
    double window_T = 5.0;
    double tau_min = 0.0;
    double tau_max = 50.0;
    double tau_step = 0.01;
    int samples_per_unit = 64;
    WindowMode window = WindowMode::two_sided;
    std::vector<double> horizons = {100.0, 1000.0};
    double growth_factor = 1.5;
    /// Horizon for poisson_return_times; 0 means tau_max.
    double return_horizon = 0.0;
    /// Report `periodic` when the finest shift set is an arithmetic ladder.
    bool detect_period = false;
    /// Optional hull samples for the almost-periodicity probe.
    std::vector<PathView> hull_samples;
    std::vector<double> probe_deltas;
    EquicontinuityParams probe;
};

struct EpsilonEvidence {
    double epsilon = 0.0;
    ShiftSet shifts;
    std::optional<double> inclusion_length;
    std::vector<ReturnTime> returns;
};

struct RecurrenceReport {
    Classification classification = Classification::unclassified;
    std::vector<EpsilonEvidence> per_epsilon;
    std::vector<BoundednessPoint> boundedness;
    double growth_factor = 1.5;
    bool bounded = false;
    std::optional<double> period;
    std::optional<EquicontinuityReport> equicontinuity;
    /// Search parameters, echoed for provenance.
    nlohmann::json provenance;
};

/// Applies the classification table to precomputed evidence.
RecurrenceReport assemble_report(std::vector<EpsilonEvidence> per_epsilon, std::vector<BoundednessPoint> boundedness,
                                 double growth_factor, bool detect_period,
                                 std::optional<EquicontinuityReport> equicontinuity, nlohmann::json provenance);

RecurrenceReport classify(const PathView& phi, std::span<const double> epsilon_ladder, const ClassifyParams& params);

/// Period of an arithmetic ladder of shift clusters (at least three), if any.
std::optional<double> detect_period(const ShiftSet& set);

void require_descending_ladder(std::span<const double> ladder);

nlohmann::json to_json(const ShiftSet& set);
nlohmann::json to_json(const RecurrenceReport& report);
nlohmann::json to_json(const OmegaLimitSample& sample);
nlohmann::json to_json(const EquicontinuityReport& report);
std::string text_summary(const RecurrenceReport& report);

/// CSV with header `tau,windowed_sup`.
std::string shift_csv(const ShiftSet& set);
std::string returns_csv(std::span<const ReturnTime> returns);

}  // namespace recurflow::recurrence
