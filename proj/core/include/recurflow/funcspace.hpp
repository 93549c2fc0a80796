#pragma once

// Functions of real time, the translation (Bebutov) flow on them, and the
// compact-open metric used to compare them.

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace recurflow::funcspace {

enum class SignalKind { constant, periodic, quasi_periodic, poisson_example, shifted };

std::string_view to_string(SignalKind kind);
std::optional<SignalKind> parse_signal_kind(std::string_view name);

/// Closed-form signal R -> R^m.
///
/// Layouts:
///   constant         value_c(t) = a_c
///   periodic         value_c(t) = a_c sin(w t + p)
///   quasi_periodic   value_c(t) = sum_j a_{c,j} sin(w_j t + p_j), amplitudes row-major (c, j)
///   poisson_example  value_c(t) = a_c / (2 + sin t + sin(pi t))
///   shifted          any of the above evaluated at t + base_shift
///
/// The closed form is shared between copies, so signals are cheap to copy
/// and immutable after construction.
class AnalyticSignal {
public:
    static AnalyticSignal constant(std::vector<double> values);
    static AnalyticSignal periodic(std::vector<double> amplitudes, double frequency, double phase = 0.0);
    static AnalyticSignal quasi_periodic(std::vector<double> amplitudes, std::vector<double> frequencies,
                                         std::vector<double> phase_offsets = {});
    static AnalyticSignal poisson_example(std::vector<double> amplitudes = {1.0});

    /// Reports `shifted` for translated signals; see base_kind() for the closed form.
    SignalKind kind() const { return shifted_ ? SignalKind::shifted : form_->kind; }
    SignalKind base_kind() const { return form_->kind; }
    std::size_t output_dim() const { return form_->dim; }

    std::span<const double> amplitudes() const { return form_->amplitudes; }
    std::span<const double> frequencies() const { return form_->frequencies; }
    std::span<const double> phase_offsets() const { return form_->phases; }
    double base_shift() const { return shift_; }

    void evaluate(double t, std::span<double> out) const;
    std::vector<double> operator()(double t) const;
    /// First component; convenient for scalar signals.
    double scalar(double t) const;

    /// sigma(tau, s): the returned signal evaluates to s(t + tau).
    AnalyticSignal translate(double tau) const;

    /// Same closed form with the phase offsets replaced and no shift.
    /// Only meaningful for periodic/quasi_periodic forms.
    AnalyticSignal with_phase_offsets(std::vector<double> phases) const;

    /// Per-component bound sum_j |a_{c,j}|; empty for poisson_example (unbounded).
    std::optional<std::vector<double>> sup_bound() const;

    /// Frequency pairs whose ratio sits within 1e-9 of p/q with q <= 20.
    std::vector<std::string> rational_dependence_warnings() const;

private:
    struct Form {
        SignalKind kind;
        std::vector<double> amplitudes;
        std::vector<double> frequencies;
        std::vector<double> phases;
        std::size_t dim;
    };

    explicit AnalyticSignal(std::shared_ptr<const Form> form) : form_(std::move(form)) {}

    std::shared_ptr<const Form> form_;
    double shift_ = 0.0;
    bool shifted_ = false;
};

struct TimeGrid {
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t count = 1;

    TimeGrid() = default;
    TimeGrid(double t0, double dt, std::size_t count);

    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double t_end() const { return time(count - 1); }
};

/// The metric rho on the carrier space R^m.
enum class StateNorm { euclidean, max_abs };

double state_distance(std::span<const double> a, std::span<const double> b, StateNorm norm);
double state_norm(std::span<const double> a, StateNorm norm);

/// Finite record of a path, linearly interpolated between grid points.
class SampledPath {
public:
    SampledPath(TimeGrid grid, std::vector<std::vector<double>> values, StateNorm norm = StateNorm::euclidean);

    const TimeGrid& grid() const { return grid_; }
    const std::vector<std::vector<double>>& values() const { return values_; }
    StateNorm norm() const { return norm_; }
    std::size_t dim() const { return values_.front().size(); }

    void evaluate(double t, std::span<double> out) const;

private:
    TimeGrid grid_;
    std::vector<std::vector<double>> values_;
    StateNorm norm_;
};

/// Type-erased time function t -> R^m with a coverage interval.
///
/// Views built from a SampledPath hold a reference; the path must outlive the view.
class PathView {
public:
    using Evaluator = std::function<void(double, std::span<double>)>;

    PathView(std::size_t dim, Evaluator eval,
             double lo = -std::numeric_limits<double>::infinity(),
             double hi = std::numeric_limits<double>::infinity(),
             StateNorm norm = StateNorm::euclidean);
    PathView(const AnalyticSignal& signal);  // NOLINT(google-explicit-constructor)
    PathView(const SampledPath& path);       // NOLINT(google-explicit-constructor)

    std::size_t dim() const { return dim_; }
    StateNorm norm() const { return norm_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    /// Throws CoverageError unless [a, b] lies inside the coverage interval.
    void require(double a, double b) const;
    void evaluate(double t, std::span<double> out) const;

    /// View of t -> this(t + tau).
    PathView translated(double tau) const;

private:
    std::size_t dim_;
    Evaluator eval_;
    double lo_;
    double hi_;
    StateNorm norm_;
};

struct CompactOpenMetricParams {
    int n_max = 20;
    int samples_per_unit = 64;
    /// Window center; levels compare over [center - n, center + n].
    double center = 0.0;
};

struct CompactOpenDistance {
    double value = 0.0;
    /// Every omitted summand is below 2^-n, so the tail is at most 2^-n_max.
    double truncation_bound = 0.0;
    /// d_1 .. d_{n_max}.
    std::vector<double> level_seminorms;
};

/// d_n(f, g) = max over the uniform grid on [center - n, center + n] of rho(f(t), g(t)).
double seminorm_dn(const PathView& f, const PathView& g, int n, int samples_per_unit, double center = 0.0);

/// Truncated series sum_{n=1}^{n_max} 2^-n d_n / (1 + d_n).
CompactOpenDistance compact_open_distance(const PathView& f, const PathView& g,
                                          const CompactOpenMetricParams& params = {});

/// Offsets -n + k/spu, k = 0 .. 2 n spu.
std::vector<double> symmetric_offsets(double half_width, int samples_per_unit);

}  // namespace recurflow::funcspace
