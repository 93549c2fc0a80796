#include "recurflow/recurrence.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "recurflow/errors.hpp"
#include "recurflow/io.hpp"

namespace recurflow::recurrence {

using funcspace::state_distance;
using funcspace::state_norm;

std::string_view to_string(WindowMode mode) {
    return mode == WindowMode::two_sided ? "two_sided" : "one_sided";
}

std::string_view to_string(Classification c) {
    switch (c) {
    case Classification::periodic: return "periodic";
    case Classification::almost_periodic_candidate: return "almost_periodic_candidate";
    case Classification::recurrent_candidate: return "recurrent_candidate";
    case Classification::poisson_stable_positive_candidate: return "poisson_stable_positive_candidate";
    case Classification::unclassified: return "unclassified";
    }
    return "unclassified";
}

// ---------------------------------------------------------------------------
// Windowed sup

namespace {

std::vector<double> window_times(double window_T, int spu, WindowMode mode) {
    if (!(window_T > 0.0)) throw InvalidArgument("window_T must be positive");
    auto offsets = funcspace::symmetric_offsets(window_T, spu);
    if (mode == WindowMode::one_sided) {
        for (std::size_t k = 0; k < offsets.size(); ++k) offsets[k] = static_cast<double>(k) / spu;
    }
    return offsets;
}

// Visit 0, s, 2s, ... then the odd multiples of s/2, and so on down to stride 1.
std::vector<std::size_t> coarse_to_fine(std::size_t count) {
    std::vector<std::size_t> order;
    order.reserve(count);
    std::size_t stride = 1;
    while (stride * 2 < count) stride *= 2;
    for (std::size_t k = 0; k < count; k += stride) order.push_back(k);
    for (; stride > 1; stride /= 2) {
        for (std::size_t k = stride / 2; k < count; k += stride) order.push_back(k);
    }
    return order;
}

void check_tau_range(double tau_min, double tau_max, double tau_step) {
    if (!(tau_step > 0.0)) throw InvalidArgument("tau_step must be positive");
    if (!(tau_max >= tau_min)) throw InvalidArgument("tau range must satisfy tau_min <= tau_max");
}

}  // namespace

WindowedSup::WindowedSup(const PathView& phi, double window_T, int samples_per_unit, WindowMode mode)
    : phi_(phi), times_(window_times(window_T, samples_per_unit, mode)), order_(coarse_to_fine(times_.size())),
      reference_(times_.size(), std::vector<double>(phi.dim())), scratch_(phi.dim()) {
    phi_.require(times_.front(), times_.back());
    for (std::size_t k = 0; k < times_.size(); ++k) phi_.evaluate(times_[k], reference_[k]);
}

double WindowedSup::operator()(double tau, double abort_at) const {
    double sup = 0.0;
    for (std::size_t k : order_) {
        phi_.evaluate(times_[k] + tau, scratch_);
        sup = std::max(sup, state_distance(scratch_, reference_[k], phi_.norm()));
        if (sup >= abort_at) break;
    }
    return sup;
}

std::vector<double> tau_grid(double tau_min, double tau_max, double tau_step) {
    check_tau_range(tau_min, tau_max, tau_step);
    const auto last = static_cast<std::size_t>(std::floor((tau_max - tau_min) / tau_step + 1e-9));
    std::vector<double> grid(last + 1);
    for (std::size_t k = 0; k <= last; ++k) grid[k] = tau_min + static_cast<double>(k) * tau_step;
    return grid;
}

ShiftSet shift_set(const PathView& phi, const ShiftScanParams& p) {
    if (!(p.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    const auto taus = tau_grid(p.tau_min, p.tau_max, p.tau_step);
    WindowedSup sup(phi, p.window_T, p.samples_per_unit, p.window);
    phi.require(sup.window_lo() + p.tau_min, sup.window_hi() + p.tau_max);

    ShiftSet out{p.epsilon, p.window_T, p.tau_min, p.tau_max, p.tau_step, p.samples_per_unit, p.window, {}, {}};
    for (double tau : taus) {
        const double s = sup(tau, p.epsilon);
        if (s < p.epsilon) {
            out.shifts.push_back(tau);
            out.windowed_sup.push_back(s);
        }
    }
    return out;
}

std::optional<double> inclusion_length(const ShiftSet& set) {
    if (set.shifts.empty()) return std::nullopt;
    const double range = set.tau_max - set.tau_min;
    double gap = set.shifts.front() - set.tau_min;
    for (std::size_t i = 1; i < set.shifts.size(); ++i) gap = std::max(gap, set.shifts[i] - set.shifts[i - 1]);
    gap = std::max(gap, set.tau_max - set.shifts.back());
    if (gap >= range) return std::nullopt;
    return gap;
}

// ---------------------------------------------------------------------------
// Return times

std::vector<ReturnTime> returns_from_scan(std::span<const double> taus, std::span<const double> sups, double epsilon,
                                          bool skip_initial_run) {
    if (taus.size() != sups.size()) throw InvalidArgument("returns_from_scan: size mismatch");
    std::vector<ReturnTime> out;
    bool initial = skip_initial_run;
    bool inside = false;
    ReturnTime best;
    for (std::size_t k = 0; k < taus.size(); ++k) {
        const bool member = sups[k] < epsilon;
        if (initial) {
            if (!member) initial = false;
            continue;
        }
        if (member) {
            if (!inside || sups[k] < best.windowed_sup) best = {taus[k], sups[k]};
            inside = true;
        } else if (inside) {
            out.push_back(best);
            inside = false;
        }
    }
    if (inside) out.push_back(best);
    return out;
}

std::vector<ReturnTime> poisson_return_times(const PathView& phi, const ReturnScanParams& p) {
    if (!(p.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    if (!(p.horizon > p.window_T)) throw InvalidArgument("return-time horizon must exceed window_T");
    if (!(p.tau_step > 0.0)) throw InvalidArgument("tau_step must be positive");
    WindowedSup sup(phi, p.window_T, p.samples_per_unit, p.window);
    phi.require(sup.window_lo(), sup.window_hi() + p.horizon);

    const auto last = static_cast<std::size_t>(std::floor(p.horizon / p.tau_step + 1e-9));
    std::vector<double> taus;
    std::vector<double> sups;
    taus.reserve(last);
    sups.reserve(last);
    for (std::size_t k = 1; k <= last; ++k) {
        const double tau = static_cast<double>(k) * p.tau_step;
        taus.push_back(tau);
        sups.push_back(sup(tau, p.epsilon));
    }
    return returns_from_scan(taus, sups, p.epsilon, true);
}

// ---------------------------------------------------------------------------
// Boundedness

std::vector<BoundednessPoint> boundedness_scan(const PathView& phi, std::span<const double> horizons,
                                               int samples_per_unit) {
    if (horizons.empty()) throw InvalidArgument("boundedness_scan needs at least one horizon");
    if (samples_per_unit <= 0) throw InvalidArgument("samples_per_unit must be positive");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (!(horizons[i] > 0.0) || (i > 0 && !(horizons[i] > horizons[i - 1]))) {
            throw InvalidArgument("boundedness horizons must be positive and strictly increasing");
        }
    }
    phi.require(0.0, horizons.back());
    std::vector<BoundednessPoint> out;
    std::vector<double> value(phi.dim());
    double sup = 0.0;
    std::size_t k = 0;
    for (double h : horizons) {
        const auto last = static_cast<std::size_t>(std::floor(h * samples_per_unit + 1e-9));
        for (; k <= last; ++k) {
            phi.evaluate(static_cast<double>(k) / samples_per_unit, value);
            sup = std::max(sup, state_norm(value, phi.norm()));
        }
        out.push_back({h, sup});
    }
    return out;
}

bool passes_growth_test(std::span<const BoundednessPoint> scan, double growth_factor) {
    if (scan.empty()) return false;
    const double first = scan.front().sup;
    const double last = scan.back().sup;
    if (!std::isfinite(last)) return false;
    return last <= growth_factor * first || last == 0.0;
}

// ---------------------------------------------------------------------------
// omega-limit sampling

OmegaLimitBuilder::OmegaLimitBuilder(double epsilon, double burn_in) : epsilon_(epsilon), burn_in_(burn_in) {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
}

std::optional<std::size_t> OmegaLimitBuilder::add(std::size_t index, double time,
                                                  const std::function<double(std::size_t)>& distance_to) {
    if (!(time > burn_in_)) return std::nullopt;
    std::size_t hit = clusters_.size();
    for (std::size_t c = 0; c < clusters_.size(); ++c) {
        if (distance_to(c) < epsilon_) {
            hit = c;
            break;
        }
    }
    if (hit == clusters_.size()) clusters_.push_back({index, time, {}, {}});
    auto& cluster = clusters_[hit];
    cluster.visit_times.push_back(time);
    if (!previous_ || *previous_ != hit) cluster.entry_times.push_back(time);
    previous_ = hit;
    return hit;
}

OmegaLimitSample OmegaLimitBuilder::finish() const {
    OmegaLimitSample out{epsilon_, burn_in_, clusters_.size(), {}};
    for (const auto& c : clusters_) {
        if (c.visit_times.size() >= 2) out.states.push_back(c);
    }
    return out;
}

OmegaLimitSample omega_limit_sample(std::span<const double> times, const IndexDistance& distance, double epsilon,
                                    double burn_in) {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    if (times.size() < 2) throw InvalidArgument("omega_limit_sample: trajectory needs at least two samples");
    const double duration = times.back() - times.front();
    if (!(duration > 2.0 * burn_in)) {
        throw InvalidArgument(fmt::format("omega_limit_sample: trajectory duration {:.17g} does not exceed twice "
                                          "the burn-in {:.17g}",
                                          duration, burn_in));
    }

    OmegaLimitBuilder builder(epsilon, burn_in);
    for (std::size_t i = 0; i < times.size(); ++i) {
        builder.add(i, times[i], [&](std::size_t c) { return distance(builder.representative(c), i); });
    }
    return builder.finish();
}

OmegaLimitSample omega_limit_sample(const funcspace::SampledPath& path, double epsilon, double burn_in) {
    std::vector<double> times(path.grid().count);
    for (std::size_t k = 0; k < times.size(); ++k) times[k] = path.grid().time(k);
    const auto& values = path.values();
    return omega_limit_sample(
        times, [&](std::size_t a, std::size_t b) { return state_distance(values[a], values[b], path.norm()); },
        epsilon, burn_in);
}

// ---------------------------------------------------------------------------
// Equicontinuity probe

EquicontinuityReport equicontinuity_probe(std::span<const PathView> hull, std::span<const double> deltas,
                                          const EquicontinuityParams& p) {
    if (hull.size() < 2) throw InvalidArgument("equicontinuity_probe needs at least two hull samples");
    if (deltas.empty()) throw InvalidArgument("equicontinuity_probe needs a delta ladder");
    if (!(p.scan_step > 0.0) || !(p.horizon >= 0.0)) throw InvalidArgument("probe scan grid is invalid");
    for (const auto& h : hull) {
        if (h.dim() != hull.front().dim()) throw InvalidArgument("hull samples have different dimensions");
        h.require(-p.window_T, p.horizon + p.window_T);
    }

    const auto offsets = funcspace::symmetric_offsets(p.window_T, p.samples_per_unit);
    const auto steps = static_cast<std::size_t>(std::floor(p.horizon / p.scan_step + 1e-9));
    const std::size_t dim = hull.front().dim();
    std::vector<double> a(dim);
    std::vector<double> b(dim);
    auto window_distance = [&](const PathView& f, const PathView& g, double center) {
        double sup = 0.0;
        for (double o : offsets) {
            f.evaluate(center + o, a);
            g.evaluate(center + o, b);
            sup = std::max(sup, state_distance(a, b, f.norm()));
        }
        return sup;
    };

    EquicontinuityReport out;
    out.params = p;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        for (std::size_t j = i + 1; j < hull.size(); ++j) {
            EquicontinuityPair pair{i, j, window_distance(hull[i], hull[j], 0.0), 0.0};
            pair.worst = pair.initial;
            for (std::size_t s = 1; s <= steps; ++s) {
                pair.worst = std::max(pair.worst, window_distance(hull[i], hull[j], static_cast<double>(s) * p.scan_step));
            }
            if (pair.initial > 0.0) out.expansion_factor = std::max(out.expansion_factor, pair.worst / pair.initial);
            out.pairs.push_back(pair);
        }
    }

    for (double delta : deltas) {
        EquicontinuityRow row{delta, 0, std::nullopt};
        for (const auto& pair : out.pairs) {
            if (pair.initial < delta) {
                ++row.pairs;
                row.modulus = std::max(row.modulus.value_or(0.0), pair.worst);
            }
        }
        if (row.modulus && *row.modulus < p.epsilon) {
            out.delta_for_epsilon = std::max(out.delta_for_epsilon.value_or(0.0), delta);
        }
        out.rows.push_back(row);
    }
    out.passed = out.delta_for_epsilon.has_value();
    return out;
}

// ---------------------------------------------------------------------------
// Classification

void require_descending_ladder(std::span<const double> ladder) {
    if (ladder.empty()) throw InvalidArgument("epsilon ladder must not be empty");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (!(ladder[i] > 0.0)) throw InvalidArgument("epsilon ladder entries must be positive");
        if (i > 0 && !(ladder[i] < ladder[i - 1])) {
            throw InvalidArgument("epsilon ladder must be strictly decreasing");
        }
    }
}

std::optional<double> detect_period(const ShiftSet& set) {
    if (set.shifts.empty()) return std::nullopt;
    std::vector<double> centers;
    double best_tau = set.shifts[0];
    double best_sup = set.windowed_sup[0];
    for (std::size_t i = 1; i <= set.shifts.size(); ++i) {
        const bool split = i == set.shifts.size() || set.shifts[i] - set.shifts[i - 1] > 1.5 * set.tau_step;
        if (split) {
            centers.push_back(best_tau);
            if (i < set.shifts.size()) {
                best_tau = set.shifts[i];
                best_sup = set.windowed_sup[i];
            }
        } else if (set.windowed_sup[i] < best_sup) {
            best_tau = set.shifts[i];
            best_sup = set.windowed_sup[i];
        }
    }
    if (centers.size() < 3) return std::nullopt;
    const double period = (centers.back() - centers.front()) / static_cast<double>(centers.size() - 1);
    const double tol = 2.0 * set.tau_step + 1e-3 * period;
    for (std::size_t i = 1; i < centers.size(); ++i) {
        if (std::abs(centers[i] - centers[i - 1] - period) > tol) return std::nullopt;
    }
    const double phase = centers.front() - std::round(centers.front() / period) * period;
    if (std::abs(phase) > tol) return std::nullopt;
    return period;
}

RecurrenceReport assemble_report(std::vector<EpsilonEvidence> per_epsilon, std::vector<BoundednessPoint> boundedness,
                                 double growth_factor, bool want_period,
                                 std::optional<EquicontinuityReport> equicontinuity, nlohmann::json provenance) {
    RecurrenceReport r;
    r.per_epsilon = std::move(per_epsilon);
    r.boundedness = std::move(boundedness);
    r.growth_factor = growth_factor;
    r.bounded = passes_growth_test(r.boundedness, growth_factor);
    r.equicontinuity = std::move(equicontinuity);
    r.provenance = std::move(provenance);

    const bool all_dense = !r.per_epsilon.empty() &&
                           std::all_of(r.per_epsilon.begin(), r.per_epsilon.end(),
                                       [](const EpsilonEvidence& e) { return e.inclusion_length.has_value(); });
    const bool all_return = !r.per_epsilon.empty() &&
                            std::all_of(r.per_epsilon.begin(), r.per_epsilon.end(),
                                        [](const EpsilonEvidence& e) { return !e.returns.empty(); });

    if (all_dense && r.bounded) {
        if (want_period) r.period = detect_period(r.per_epsilon.back().shifts);
        if (r.period) {
            r.classification = Classification::periodic;
        } else if (r.equicontinuity && r.equicontinuity->passed) {
            r.classification = Classification::almost_periodic_candidate;
        } else {
            r.classification = Classification::recurrent_candidate;
        }
    } else if (all_return) {
        r.classification = Classification::poisson_stable_positive_candidate;
    } else {
        r.classification = Classification::unclassified;
    }
    return r;
}

RecurrenceReport classify(const PathView& phi, std::span<const double> ladder, const ClassifyParams& p) {
    require_descending_ladder(ladder);
    const double return_horizon = p.return_horizon > 0.0 ? p.return_horizon : p.tau_max;

    std::vector<EpsilonEvidence> evidence;
    for (double eps : ladder) {
        EpsilonEvidence e;
        e.epsilon = eps;
        e.shifts = shift_set(phi, {eps, p.window_T, p.tau_min, p.tau_max, p.tau_step, p.samples_per_unit, p.window});
        e.inclusion_length = inclusion_length(e.shifts);
        e.returns = poisson_return_times(phi, {eps, p.window_T, return_horizon, p.tau_step, p.samples_per_unit, p.window});
        evidence.push_back(std::move(e));
    }
    auto scan = boundedness_scan(phi, p.horizons, p.samples_per_unit);

    std::optional<EquicontinuityReport> probe;
    if (!p.hull_samples.empty()) probe = equicontinuity_probe(p.hull_samples, p.probe_deltas, p.probe);

    nlohmann::json provenance = {
        {"window_T", p.window_T},
        {"window", to_string(p.window)},
        {"tau_min", p.tau_min},
        {"tau_max", p.tau_max},
        {"tau_step", p.tau_step},
        {"samples_per_unit", p.samples_per_unit},
        {"horizons", p.horizons},
        {"growth_factor", p.growth_factor},
        {"return_horizon", return_horizon},
        {"detect_period", p.detect_period},
        {"epsilon_ladder", std::vector<double>(ladder.begin(), ladder.end())},
    };
    return assemble_report(std::move(evidence), std::move(scan), p.growth_factor, p.detect_period, std::move(probe),
                           std::move(provenance));
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const ShiftSet& s) {
    return {
        {"epsilon", s.epsilon},   {"window_T", s.window_T},  {"window", to_string(s.window)},
        {"tau_min", s.tau_min},   {"tau_max", s.tau_max},    {"tau_step", s.tau_step},
        {"samples_per_unit", s.samples_per_unit},            {"count", s.shifts.size()},
        {"shifts", s.shifts},     {"windowed_sup", s.windowed_sup},
    };
}

nlohmann::json to_json(const OmegaLimitSample& s) {
    nlohmann::json states = nlohmann::json::array();
    for (const auto& c : s.states) {
        states.push_back({{"representative_index", c.representative},
                          {"representative_time", c.representative_time},
                          {"visits", c.visit_times.size()},
                          {"visit_times", c.visit_times},
                          {"entry_times", c.entry_times}});
    }
    return {{"epsilon", s.epsilon}, {"burn_in", s.burn_in}, {"clusters_total", s.clusters_total}, {"states", states}};
}

nlohmann::json to_json(const EquicontinuityReport& r) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : r.pairs) {
        pairs.push_back({{"first", p.first}, {"second", p.second}, {"initial", p.initial}, {"worst", p.worst}});
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"delta", row.delta},
                        {"pairs", row.pairs},
                        {"modulus", row.modulus ? nlohmann::json(*row.modulus) : nlohmann::json(nullptr)}});
    }
    return {
        {"epsilon", r.params.epsilon},
        {"window_T", r.params.window_T},
        {"horizon", r.params.horizon},
        {"scan_step", r.params.scan_step},
        {"pairs", pairs},
        {"rows", rows},
        {"delta_for_epsilon", r.delta_for_epsilon ? nlohmann::json(*r.delta_for_epsilon) : nlohmann::json(nullptr)},
        {"passed", r.passed},
        {"expansion_factor", r.expansion_factor},
    };
}

nlohmann::json to_json(const RecurrenceReport& r) {
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& e : r.per_epsilon) {
        nlohmann::json returns = nlohmann::json::array();
        for (const auto& t : e.returns) returns.push_back({{"tau", t.tau}, {"windowed_sup", t.windowed_sup}});
        eps.push_back({
            {"epsilon", e.epsilon},
            {"inclusion_length", e.inclusion_length ? nlohmann::json(*e.inclusion_length)
                                                    : nlohmann::json("not found within search range")},
            {"shift_set", to_json(e.shifts)},
            {"return_times", returns},
        });
    }
    nlohmann::json bounds = nlohmann::json::array();
    for (const auto& b : r.boundedness) bounds.push_back({{"horizon", b.horizon}, {"sup", b.sup}});
    nlohmann::json out = {
        {"classification", to_string(r.classification)},
        {"per_epsilon", eps},
        {"boundedness", {{"scan", bounds}, {"growth_factor", r.growth_factor}, {"bounded", r.bounded}}},
        {"period", r.period ? nlohmann::json(*r.period) : nlohmann::json(nullptr)},
        {"equicontinuity", r.equicontinuity ? to_json(*r.equicontinuity) : nlohmann::json(nullptr)},
        {"provenance", r.provenance},
        {"note", "finite-window evidence only; suprema over R are replaced by suprema over the scanned window"},
    };
    return out;
}

std::string text_summary(const RecurrenceReport& r) {
    std::string out = fmt::format("classification: {}\n", to_string(r.classification));
    for (const auto& e : r.per_epsilon) {
        out += fmt::format("  eps {:<10} shifts {:>8}  inclusion length {:<24} returns {}\n", io::fmt17(e.epsilon),
                           e.shifts.shifts.size(),
                           e.inclusion_length ? io::fmt17(*e.inclusion_length) : std::string("not found"),
                           e.returns.size());
    }
    for (const auto& b : r.boundedness) {
        out += fmt::format("  sup over [0, {}] = {}\n", io::fmt17(b.horizon), io::fmt17(b.sup));
    }
    out += fmt::format("  bounded (growth factor {}): {}\n", io::fmt17(r.growth_factor), r.bounded ? "yes" : "no");
    if (r.period) out += fmt::format("  period: {}\n", io::fmt17(*r.period));
    if (r.equicontinuity) {
        out += fmt::format("  equicontinuity probe: {} (expansion factor {})\n",
                           r.equicontinuity->passed ? "passed" : "failed",
                           io::fmt17(r.equicontinuity->expansion_factor));
    }
    return out;
}

std::string shift_csv(const ShiftSet& set) {
    std::string out = "tau,windowed_sup\n";
    for (std::size_t i = 0; i < set.shifts.size(); ++i) {
        out += io::fmt17(set.shifts[i]) + "," + io::fmt17(set.windowed_sup[i]) + "\n";
    }
    return out;
}

std::string returns_csv(std::span<const ReturnTime> returns) {
    std::string out = "tau,windowed_sup\n";
    for (const auto& r : returns) out += io::fmt17(r.tau) + "," + io::fmt17(r.windowed_sup) + "\n";
    return out;
}

}  // namespace recurflow::recurrence
