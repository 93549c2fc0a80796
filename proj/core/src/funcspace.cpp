#include "recurflow/funcspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "recurflow/errors.hpp"

namespace recurflow::funcspace {

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw InvalidArgument(fmt::format("{}: non-finite entry", what));
        }
    }
}

}  // namespace

std::string_view to_string(SignalKind kind) {
    switch (kind) {
    case SignalKind::constant: return "constant";
    case SignalKind::periodic: return "periodic";
    case SignalKind::quasi_periodic: return "quasi_periodic";
    case SignalKind::poisson_example: return "poisson_example";
    case SignalKind::shifted: return "shifted";
    }
    return "unknown";
}

std::optional<SignalKind> parse_signal_kind(std::string_view name) {
    for (auto k : {SignalKind::constant, SignalKind::periodic, SignalKind::quasi_periodic,
                   SignalKind::poisson_example, SignalKind::shifted}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// AnalyticSignal

AnalyticSignal AnalyticSignal::constant(std::vector<double> values) {
    if (values.empty()) throw InvalidArgument("constant signal needs at least one value");
    require_finite(values, "constant signal");
    auto dim = values.size();
    return AnalyticSignal(std::make_shared<const Form>(Form{SignalKind::constant, std::move(values), {}, {}, dim}));
}

AnalyticSignal AnalyticSignal::periodic(std::vector<double> amplitudes, double frequency, double phase) {
    if (amplitudes.empty()) throw InvalidArgument("periodic signal needs at least one amplitude");
    require_finite(amplitudes, "periodic amplitudes");
    if (!std::isfinite(frequency) || frequency == 0.0) {
        throw InvalidArgument("periodic signal needs a finite nonzero frequency");
    }
    if (!std::isfinite(phase)) throw InvalidArgument("periodic phase must be finite");
    auto dim = amplitudes.size();
    return AnalyticSignal(std::make_shared<const Form>(
        Form{SignalKind::periodic, std::move(amplitudes), {frequency}, {phase}, dim}));
}

AnalyticSignal AnalyticSignal::quasi_periodic(std::vector<double> amplitudes, std::vector<double> frequencies,
                                              std::vector<double> phase_offsets) {
    const auto terms = frequencies.size();
    if (terms < 2) throw InvalidArgument("quasi_periodic signal needs at least two frequencies");
    if (amplitudes.empty() || amplitudes.size() % terms != 0) {
        throw InvalidArgument(fmt::format("quasi_periodic amplitudes: expected a multiple of {} entries, got {}",
                                          terms, amplitudes.size()));
    }
    if (phase_offsets.empty()) phase_offsets.assign(terms, 0.0);
    if (phase_offsets.size() != terms) {
        throw InvalidArgument(fmt::format("quasi_periodic phase_offsets: expected {} entries, got {}", terms,
                                          phase_offsets.size()));
    }
    require_finite(amplitudes, "quasi_periodic amplitudes");
    require_finite(frequencies, "quasi_periodic frequencies");
    require_finite(phase_offsets, "quasi_periodic phase_offsets");
    auto dim = amplitudes.size() / terms;
    return AnalyticSignal(std::make_shared<const Form>(Form{SignalKind::quasi_periodic, std::move(amplitudes),
                                                            std::move(frequencies), std::move(phase_offsets),
                                                            dim}));
}

AnalyticSignal AnalyticSignal::poisson_example(std::vector<double> amplitudes) {
    if (amplitudes.empty()) throw InvalidArgument("poisson_example needs at least one amplitude");
    require_finite(amplitudes, "poisson_example amplitudes");
    auto dim = amplitudes.size();
    return AnalyticSignal(
        std::make_shared<const Form>(Form{SignalKind::poisson_example, std::move(amplitudes), {}, {}, dim}));
}

void AnalyticSignal::evaluate(double t, std::span<double> out) const {
    const Form& f = *form_;
    if (shifted_) t += shift_;
    switch (f.kind) {
    case SignalKind::constant:
        std::copy(f.amplitudes.begin(), f.amplitudes.end(), out.begin());
        return;
    case SignalKind::periodic: {
        const double s = std::sin(f.frequencies[0] * t + f.phases[0]);
        for (std::size_t c = 0; c < f.dim; ++c) out[c] = f.amplitudes[c] * s;
        return;
    }
    case SignalKind::quasi_periodic: {
        const std::size_t terms = f.frequencies.size();
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(f.dim), 0.0);
        for (std::size_t j = 0; j < terms; ++j) {
            const double s = std::sin(f.frequencies[j] * t + f.phases[j]);
            for (std::size_t c = 0; c < f.dim; ++c) out[c] += f.amplitudes[c * terms + j] * s;
        }
        return;
    }
    case SignalKind::poisson_example: {
        // 2 + sin t + sin(pi t) > 0 for every real t since pi is irrational.
        const double inv = 1.0 / (2.0 + std::sin(t) + std::sin(std::numbers::pi * t));
        for (std::size_t c = 0; c < f.dim; ++c) out[c] = f.amplitudes[c] * inv;
        return;
    }
    case SignalKind::shifted: break;
    }
}

std::vector<double> AnalyticSignal::operator()(double t) const {
    std::vector<double> out(output_dim());
    evaluate(t, out);
    return out;
}

double AnalyticSignal::scalar(double t) const {
    if (output_dim() == 1) {
        double v = 0.0;
        evaluate(t, std::span<double>(&v, 1));
        return v;
    }
    return (*this)(t)[0];
}

AnalyticSignal AnalyticSignal::translate(double tau) const {
    AnalyticSignal out(*this);
    out.shift_ = shift_ + tau;
    out.shifted_ = true;
    return out;
}

AnalyticSignal AnalyticSignal::with_phase_offsets(std::vector<double> phases) const {
    const Form& f = *form_;
    if (f.kind != SignalKind::periodic && f.kind != SignalKind::quasi_periodic) {
        throw InvalidArgument("phase offsets only exist for periodic and quasi_periodic signals");
    }
    if (phases.size() != f.frequencies.size()) {
        throw InvalidArgument("phase vector length must match the number of frequencies");
    }
    require_finite(phases, "phase offsets");
    return AnalyticSignal(std::make_shared<const Form>(Form{f.kind, f.amplitudes, f.frequencies, std::move(phases), f.dim}));
}

std::optional<std::vector<double>> AnalyticSignal::sup_bound() const {
    const Form& f = *form_;
    std::vector<double> bound(f.dim, 0.0);
    switch (f.kind) {
    case SignalKind::poisson_example: return std::nullopt;
    case SignalKind::constant:
    case SignalKind::periodic:
        for (std::size_t c = 0; c < f.dim; ++c) bound[c] = std::abs(f.amplitudes[c]);
        return bound;
    case SignalKind::quasi_periodic: {
        const std::size_t terms = f.frequencies.size();
        for (std::size_t c = 0; c < f.dim; ++c) {
            for (std::size_t j = 0; j < terms; ++j) bound[c] += std::abs(f.amplitudes[c * terms + j]);
        }
        return bound;
    }
    case SignalKind::shifted: break;
    }
    return bound;
}

std::vector<std::string> AnalyticSignal::rational_dependence_warnings() const {
    std::vector<std::string> warnings;
    const auto& w = form_->frequencies;
    if (form_->kind != SignalKind::quasi_periodic) return warnings;
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = i + 1; j < w.size(); ++j) {
            if (w[j] == 0.0) continue;
            const double ratio = w[i] / w[j];
            for (int q = 1; q <= 20; ++q) {
                const double p = std::round(ratio * q);
                if (std::abs(ratio - p / q) < 1e-9) {
                    warnings.push_back(fmt::format(
                        "frequencies {:.17g} and {:.17g} have ratio within 1e-9 of {}/{}; the signal is periodic",
                        w[i], w[j], static_cast<long long>(p), q));
                    break;
                }
            }
        }
    }
    return warnings;
}

// ---------------------------------------------------------------------------
// Grids and sampled paths

TimeGrid::TimeGrid(double t0_, double dt_, std::size_t count_) : t0(t0_), dt(dt_), count(count_) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("TimeGrid: dt must be positive");
    if (count == 0) throw InvalidArgument("TimeGrid: count must be positive");
    if (!std::isfinite(t0)) throw InvalidArgument("TimeGrid: t0 must be finite");
}

double state_distance(std::span<const double> a, std::span<const double> b, StateNorm norm) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        if (norm == StateNorm::euclidean) {
            acc += d * d;
        } else {
            acc = std::max(acc, d);
        }
    }
    return norm == StateNorm::euclidean ? std::sqrt(acc) : acc;
}

double state_norm(std::span<const double> a, StateNorm norm) {
    if (a.size() == 1) return std::abs(a[0]);
    double acc = 0.0;
    for (double v : a) acc = norm == StateNorm::euclidean ? acc + v * v : std::max(acc, std::abs(v));
    return norm == StateNorm::euclidean ? std::sqrt(acc) : acc;
}

SampledPath::SampledPath(TimeGrid grid, std::vector<std::vector<double>> values, StateNorm norm)
    : grid_(grid), values_(std::move(values)), norm_(norm) {
    if (values_.size() != grid_.count) {
        throw InvalidArgument(fmt::format("SampledPath: {} values for a grid of {} points", values_.size(),
                                          grid_.count));
    }
    const auto dim = values_.front().size();
    if (dim == 0) throw InvalidArgument("SampledPath: empty state vectors");
    for (const auto& v : values_) {
        if (v.size() != dim) throw InvalidArgument("SampledPath: ragged state vectors");
        require_finite(v, "SampledPath value");
    }
}

void SampledPath::evaluate(double t, std::span<double> out) const {
    const double lo = grid_.t0;
    const double hi = grid_.t_end();
    const double slack = 1e-9 * grid_.dt;
    if (t < lo - slack || t > hi + slack) throw CoverageError(t, t, lo, hi);
    const double x = std::clamp((t - lo) / grid_.dt, 0.0, static_cast<double>(grid_.count - 1));
    auto k = static_cast<std::size_t>(std::floor(x));
    if (k + 1 >= grid_.count) {
        std::copy(values_.back().begin(), values_.back().end(), out.begin());
        return;
    }
    const double w = x - static_cast<double>(k);
    const auto& a = values_[k];
    const auto& b = values_[k + 1];
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = w == 0.0 ? a[i] : (1.0 - w) * a[i] + w * b[i];
}

// ---------------------------------------------------------------------------
// PathView

PathView::PathView(std::size_t dim, Evaluator eval, double lo, double hi, StateNorm norm)
    : dim_(dim), eval_(std::move(eval)), lo_(lo), hi_(hi), norm_(norm) {
    if (dim_ == 0) throw InvalidArgument("PathView: dimension must be positive");
}

PathView::PathView(const AnalyticSignal& signal)
    : PathView(signal.output_dim(), [signal](double t, std::span<double> out) { signal.evaluate(t, out); }) {}

PathView::PathView(const SampledPath& path)
    : PathView(path.dim(), [&path](double t, std::span<double> out) { path.evaluate(t, out); }, path.grid().t0,
               path.grid().t_end(), path.norm()) {}

void PathView::require(double a, double b) const {
    const double slack = 1e-9 * std::max(1.0, std::abs(b - a));
    if (a < lo_ - slack || b > hi_ + slack) throw CoverageError(a, b, lo_, hi_);
}

void PathView::evaluate(double t, std::span<double> out) const { eval_(t, out); }

PathView PathView::translated(double tau) const {
    auto inner = eval_;
    return PathView(
        dim_, [inner, tau](double t, std::span<double> out) { inner(t + tau, out); }, lo_ - tau, hi_ - tau,
        norm_);
}

// ---------------------------------------------------------------------------
// Compact-open metric

std::vector<double> symmetric_offsets(double half_width, int samples_per_unit) {
    if (samples_per_unit <= 0) throw InvalidArgument("samples_per_unit must be positive");
    if (!(half_width >= 0.0)) throw InvalidArgument("window half-width must be nonnegative");
    const auto count = static_cast<std::size_t>(std::llround(2.0 * half_width * samples_per_unit)) + 1;
    std::vector<double> offsets(count);
    for (std::size_t k = 0; k < count; ++k) {
        offsets[k] = -half_width + static_cast<double>(k) / samples_per_unit;
    }
    return offsets;
}

namespace {

void check_pair(const PathView& f, const PathView& g) {
    if (f.dim() != g.dim()) {
        throw InvalidArgument(fmt::format("paths have different dimensions ({} vs {})", f.dim(), g.dim()));
    }
}

}  // namespace

double seminorm_dn(const PathView& f, const PathView& g, int n, int samples_per_unit, double center) {
    check_pair(f, g);
    if (n <= 0) throw InvalidArgument("seminorm level n must be positive");
    f.require(center - n, center + n);
    g.require(center - n, center + n);
    std::vector<double> a(f.dim());
    std::vector<double> b(g.dim());
    double best = 0.0;
    for (double offset : symmetric_offsets(n, samples_per_unit)) {
        const double t = center + offset;
        f.evaluate(t, a);
        g.evaluate(t, b);
        best = std::max(best, state_distance(a, b, f.norm()));
    }
    return best;
}

CompactOpenDistance compact_open_distance(const PathView& f, const PathView& g,
                                          const CompactOpenMetricParams& params) {
    check_pair(f, g);
    if (params.n_max <= 0) throw InvalidArgument("n_max must be positive");
    const int n_max = params.n_max;
    const int spu = params.samples_per_unit;
    f.require(params.center - n_max, params.center + n_max);
    g.require(params.center - n_max, params.center + n_max);

    const auto offsets = symmetric_offsets(n_max, spu);
    std::vector<double> rho(offsets.size());
    std::vector<double> a(f.dim());
    std::vector<double> b(g.dim());
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        const double t = params.center + offsets[k];
        f.evaluate(t, a);
        g.evaluate(t, b);
        rho[k] = state_distance(a, b, f.norm());
    }

    CompactOpenDistance out;
    out.level_seminorms.reserve(static_cast<std::size_t>(n_max));
    const auto mid = static_cast<std::size_t>(n_max) * static_cast<std::size_t>(spu);
    double running = rho[mid];
    std::size_t reach = 0;
    for (int n = 1; n <= n_max; ++n) {
        const auto span = static_cast<std::size_t>(n) * static_cast<std::size_t>(spu);
        for (; reach < span; ++reach) {
            running = std::max({running, rho[mid - reach - 1], rho[mid + reach + 1]});
        }
        out.level_seminorms.push_back(running);
        out.value += std::ldexp(running / (1.0 + running), -n);
    }
    out.truncation_bound = std::ldexp(1.0, -n_max);
    return out;
}

}  // namespace recurflow::funcspace
