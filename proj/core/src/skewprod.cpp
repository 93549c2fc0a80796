#include "recurflow/skewprod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "recurflow/errors.hpp"
#include "recurflow/io.hpp"

namespace recurflow::skewprod {

namespace {

using json = nlohmann::json;
using funcspace::AnalyticSignal;
using funcspace::SignalKind;
using nse2d::SpectralField;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double mod_two_pi(double x) {
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    return r >= kTwoPi ? 0.0 : r;
}

long long steps_of(double x, double dt, std::string_view name) {
    const long long k = std::llround(x / dt);
    if (std::abs(static_cast<double>(k) * dt - x) > 1e-9 * std::max(1.0, std::abs(x))) {
        throw InvalidArgument(fmt::format("{} = {} is not a multiple of dt = {}", name, x, dt));
    }
    return k;
}

double euclid(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string_view to_string(HullKind kind) {
    switch (kind) {
        case HullKind::point: return "point";
        case HullKind::torus: return "torus";
        case HullKind::line: return "line";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Hull elements and the driving flow

HullElement::HullElement() : HullElement(nse2d::ForcingField()) {}

HullElement::HullElement(nse2d::ForcingField generator)
    : generator_(std::make_shared<const nse2d::ForcingField>(std::move(generator))) {
    const auto& temporal = generator_->temporal();
    switch (temporal.base_kind()) {
        case SignalKind::constant:
            kind_ = HullKind::point;
            break;
        case SignalKind::periodic:
        case SignalKind::quasi_periodic: {
            kind_ = HullKind::torus;
            const auto freqs = temporal.frequencies();
            const auto phases = temporal.phase_offsets();
            for (std::size_t j = 0; j < freqs.size(); ++j) {
                phases_.push_back(mod_two_pi(phases[j] + freqs[j] * temporal.base_shift()));
            }
            break;
        }
        default:
            kind_ = HullKind::line;
            offset_ = temporal.base_shift();
            break;
    }
    if (generator_->modes().empty()) kind_ = HullKind::point;
}

AnalyticSignal HullElement::signal() const {
    const auto& temporal = generator_->temporal();
    switch (kind_) {
        case HullKind::point: return temporal;
        case HullKind::torus: return temporal.with_phase_offsets(phases_);
        case HullKind::line: return temporal.translate(-temporal.base_shift()).translate(offset_);
    }
    return temporal;
}

nse2d::ForcingField HullElement::forcing() const {
    if (kind_ == HullKind::point) return *generator_;
    return generator_->with_temporal(signal());
}

double HullElement::parameter_distance(const HullElement& other) const {
    if (kind_ != other.kind_ || phases_.size() != other.phases_.size()) {
        throw InvalidArgument("hull elements of different generators cannot be compared");
    }
    switch (kind_) {
        case HullKind::point: return 0.0;
        case HullKind::line: return std::abs(offset_ - other.offset_);
        case HullKind::torus: {
            double d = 0.0;
            for (std::size_t j = 0; j < phases_.size(); ++j) {
                d = std::max(d, std::abs(std::remainder(phases_[j] - other.phases_[j], kTwoPi)));
            }
            return d;
        }
    }
    return 0.0;
}

nlohmann::json HullElement::to_json() const {
    json j{{"kind", std::string(to_string(kind_))},
           {"compact_minimal", compact_minimal()},
           {"compact_minimal_basis", "structural: a torus or a point is compact minimal, a line is not compact"},
           {"generator", generator_->describe()}};
    if (kind_ == HullKind::torus) j["phases"] = phases_;
    if (kind_ == HullKind::line) j["offset"] = offset_;
    return j;
}

HullElement drive(const HullElement& omega, double t) {
    HullElement out = omega;
    switch (omega.kind_) {
        case HullKind::point: break;
        case HullKind::line: out.offset_ = omega.offset_ + t; break;
        case HullKind::torus: {
            const auto freqs = omega.generator_->temporal().frequencies();
            for (std::size_t j = 0; j < out.phases_.size(); ++j) out.phases_[j] = mod_two_pi(omega.phases_[j] + freqs[j] * t);
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Skew trajectory and the cocycle check

SkewTrajectory skew_trajectory(const SpectralField& u0, const HullElement& omega0, const nse2d::SolverConfig& cfg,
                               std::size_t stride) {
    auto traj = nse2d::solve(u0, omega0.forcing(), cfg, {stride, 0.0});
    SkewTrajectory out;
    out.records = std::move(traj.records);
    out.states.reserve(traj.states.size());
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        out.states.push_back({std::move(traj.states[k]), drive(omega0, traj.times[k]), traj.times[k]});
    }

    const auto reference = omega0.signal();
    const std::size_t dim = reference.output_dim();
    std::vector<double> direct(dim);
    std::vector<double> driven(dim);
    const std::size_t steps = cfg.steps();
    for (std::size_t k = 0; k <= steps; k += 1000) {
        const double t = static_cast<double>(k) * cfg.dt;
        reference.evaluate(t, direct);
        drive(omega0, t).signal().evaluate(0.0, driven);
        for (std::size_t c = 0; c < dim; ++c) out.drive_drift = std::max(out.drive_drift, std::abs(direct[c] - driven[c]));
    }
    return out;
}

CocycleReport cocycle_check(const SpectralField& u0, const HullElement& omega0, const nse2d::SolverConfig& cfg,
                            double t, double tau, double tol) {
    if (t < 0.0 || tau < 0.0) throw InvalidArgument("cocycle_check needs t, tau >= 0");
    cfg.validate();
    const auto kt = static_cast<std::size_t>(steps_of(t, cfg.dt, "t"));
    const auto ktau = static_cast<std::size_t>(steps_of(tau, cfg.dt, "tau"));

    nse2d::Solver direct(cfg, omega0.forcing());
    direct.reset(u0, 0.0);
    direct.advance(kt + ktau);

    nse2d::Solver first(cfg, omega0.forcing());
    first.reset(u0, 0.0);
    first.advance(ktau);
    const HullElement omega_tau = drive(omega0, tau);
    nse2d::Solver second(cfg, omega_tau.forcing());
    second.reset(first.state(), 0.0);
    second.advance(kt);

    CocycleReport r;
    r.t = t;
    r.tau = tau;
    r.tolerance = tol;
    r.fiber_discrepancy = nse2d::h_distance(direct.state(), second.state());
    r.fiber_norm = nse2d::h_norm(direct.state());
    r.fiber_relative = r.fiber_norm > 0.0 ? r.fiber_discrepancy / r.fiber_norm : r.fiber_discrepancy;
    r.base_discrepancy = drive(omega0, t + tau).parameter_distance(drive(omega_tau, t));
    r.passed = r.fiber_relative <= tol;
    return r;
}

nlohmann::json to_json(const CocycleReport& r) {
    return json{{"t", r.t},
                {"tau", r.tau},
                {"tolerance", r.tolerance},
                {"fiber_discrepancy", r.fiber_discrepancy},
                {"fiber_norm", r.fiber_norm},
                {"fiber_relative", r.fiber_relative},
                {"base_discrepancy", r.base_discrepancy},
                {"passed", r.passed}};
}

// ---------------------------------------------------------------------------
// Joint search

nlohmann::json to_json(const SearchParams& p) {
    return json{{"solver", nse2d::to_json(p.solver)},
                {"horizon", p.horizon},
                {"burn_in", p.burn_in},
                {"epsilon_ladder", p.epsilon_ladder},
                {"window_T", p.window_T},
                {"tau_min", p.tau_min},
                {"tau_max", p.tau_max},
                {"tau_step", p.tau_step},
                {"compare_step", p.compare_step},
                {"base_samples_per_unit", p.base_samples_per_unit},
                {"boundedness_horizons", p.boundedness_horizons},
                {"growth_factor", p.growth_factor},
                {"omega_epsilon", p.omega_epsilon},
                {"omega_step", p.omega_step}};
}

namespace {

struct Candidate {
    std::size_t index;
    long long start;  // solver step of the first fiber comparison
    double fiber = 0.0;
    bool alive = true;
};

recurrence::ShiftSet make_set(double eps, double window_T, double tau_min, double tau_max, double tau_step, int spu,
                              std::span<const double> taus, std::span<const double> sups) {
    recurrence::ShiftSet s;
    s.epsilon = eps;
    s.window_T = window_T;
    s.tau_min = tau_min;
    s.tau_max = tau_max;
    s.tau_step = tau_step;
    s.samples_per_unit = spu;
    s.window = recurrence::WindowMode::one_sided;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (sups[i] < eps) {
            s.shifts.push_back(taus[i]);
            s.windowed_sup.push_back(sups[i]);
        }
    }
    return s;
}

}  // namespace

SearchResult joint_search(const SpectralField& u0, const HullElement& omega0, const SearchParams& p,
                          bool want_period) {
    recurrence::require_descending_ladder(p.epsilon_ladder);
    if (!(p.horizon > 0.0)) throw InvalidArgument("horizon must be positive");
    if (!(p.burn_in >= 0.0)) throw InvalidArgument("burn_in must be >= 0");
    if (!(p.window_T > 0.0)) throw InvalidArgument("window_T must be positive");
    if (!(p.compare_step > 0.0)) throw InvalidArgument("compare_step must be positive");
    if (!(p.tau_min > 0.0)) throw InvalidArgument("tau_min must be positive");
    if (!(p.omega_epsilon > 0.0) || !(p.omega_step > 0.0)) throw InvalidArgument("omega-limit parameters must be positive");
    if (p.base_samples_per_unit <= 0) throw InvalidArgument("base_samples_per_unit must be positive");

    nse2d::SolverConfig cfg = p.solver;
    cfg.t_end = p.horizon;
    cfg.validate();
    const double dt = cfg.dt;
    const long long total = steps_of(p.horizon, dt, "horizon");
    const long long b = steps_of(p.burn_in, dt, "burn_in");
    const long long c = steps_of(p.compare_step, dt, "compare_step");
    if (c <= 0) throw InvalidArgument("compare_step must be at least one solver step");
    const double window_len = 2.0 * p.window_T;
    const long long J = std::llround(window_len / p.compare_step);
    if (std::abs(static_cast<double>(J) * p.compare_step - window_len) > 1e-9 * window_len) {
        throw InvalidArgument("2 window_T must be a multiple of compare_step");
    }
    const long long window_steps = J * c;
    const long long q = p.tau_step > 0.0 ? steps_of(p.tau_step, dt, "tau_step") : 1;
    if (q <= 0) throw InvalidArgument("tau_step must be at least one solver step");
    const long long qmin = steps_of(p.tau_min, dt, "tau_min");
    const double tau_max = p.tau_max > 0.0 ? p.tau_max : p.horizon - p.burn_in - window_len;
    const long long qmax_limit = std::min(static_cast<long long>(std::floor(tau_max / dt + 1e-9)), total - b - window_steps);
    if (qmax_limit < qmin) {
        throw InvalidArgument(fmt::format("horizon {} leaves no room for tau >= {} after burn-in {} and window 2T = {}",
                                          p.horizon, p.tau_min, p.burn_in, window_len));
    }
    const auto count = static_cast<std::size_t>((qmax_limit - qmin) / q + 1);
    std::vector<double> taus(count);
    for (std::size_t i = 0; i < count; ++i) taus[i] = static_cast<double>(qmin + static_cast<long long>(i) * q) * dt;
    const double tau_step = static_cast<double>(q) * dt;

    SearchResult result;
    result.omega0 = omega0;
    const auto forcing = omega0.forcing();
    const double eps_max = p.epsilon_ladder.front();

    // Base comparison over [0, burn_in + 2T]; analytic, so it runs before the solver.
    std::vector<double> base_sup(count, 0.0);
    const double base_T = 0.5 * (p.burn_in + window_len);
    if (forcing.coordinate_dim() > 0) {
        funcspace::PathView view(forcing.coordinate_dim(),
                                 [&forcing](double t, std::span<double> out) { forcing.coordinates(t, out); });
        recurrence::WindowedSup sup(view, base_T, p.base_samples_per_unit, recurrence::WindowMode::one_sided);
        for (std::size_t i = 0; i < count; ++i) base_sup[i] = sup(taus[i], eps_max);
    }

    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < count; ++i) {
        if (base_sup[i] < eps_max) candidates.push_back({i, qmin + static_cast<long long>(i) * q + b});
    }

    std::vector<double> horizons = p.boundedness_horizons;
    if (horizons.empty()) horizons = {p.horizon / 4.0, p.horizon / 2.0, p.horizon};
    std::vector<long long> horizon_steps;
    for (double h : horizons) {
        if (!(h > 0.0) || h > p.horizon * (1.0 + 1e-12)) {
            throw InvalidArgument(fmt::format("boundedness horizon {} must lie in (0, {}]", h, p.horizon));
        }
        horizon_steps.push_back(std::min(total, std::llround(h / dt)));
    }
    for (std::size_t k = 1; k < horizon_steps.size(); ++k) {
        if (horizon_steps[k] <= horizon_steps[k - 1]) throw InvalidArgument("boundedness horizons must increase");
    }

    const double ceiling = cfg.energy_ceiling > 0.0 ? cfg.energy_ceiling : nse2d::auto_energy_ceiling(u0, forcing, cfg);
    nse2d::Solver solver(cfg, forcing);
    solver.reset(u0, 0.0);

    std::vector<SpectralField> refs;
    refs.reserve(static_cast<std::size_t>(J + 1));
    result.segment.config = cfg;
    result.segment.config.t_end = window_len;
    result.segment.forcing = forcing.describe();
    result.segment.stride = static_cast<std::size_t>(c);

    recurrence::OmegaLimitBuilder omega(p.omega_epsilon, p.burn_in);
    std::vector<SpectralField> reps;
    std::vector<std::vector<double>> rep_coords;
    std::vector<double> coords(forcing.coordinate_dim());
    const long long omega_stride = std::max<long long>(1, steps_of(p.omega_step, dt, "omega_step"));
    std::vector<double> omega_times;

    std::vector<recurrence::BoundednessPoint> boundedness;
    std::size_t next_horizon = 0;
    double u_sup = 0.0;
    std::size_t lo = 0;
    std::size_t hi = 0;

    try {
        for (long long m = 0; m <= total; ++m) {
            if (m > 0) solver.step();
            const auto rec = solver.record();
            if (rec.energy > ceiling) {
                throw SolverError(fmt::format("energy {} exceeded the ceiling {} (blow-up)", rec.energy, ceiling), rec.t);
            }
            const auto& u = solver.state();
            result.enstrophy_sup = std::max(result.enstrophy_sup, rec.enstrophy);
            result.forcing_sup = std::max(result.forcing_sup, rec.forcing_norm);
            u_sup = std::max(u_sup, std::sqrt(2.0 * rec.energy));
            while (next_horizon < horizon_steps.size() && horizon_steps[next_horizon] == m) {
                boundedness.push_back({horizons[next_horizon], u_sup});
                ++next_horizon;
            }
            if (m % c == 0) result.series.push_back(rec);

            if (m >= b && m <= b + window_steps) {
                result.segment.records.push_back(rec);
                if ((m - b) % c == 0) {
                    refs.push_back(u);
                    result.segment.states.push_back(u);
                    result.segment.times.push_back(rec.t);
                }
            }

            while (hi < candidates.size() && candidates[hi].start <= m) ++hi;
            while (lo < hi && candidates[lo].start + window_steps < m) ++lo;
            for (std::size_t k = lo; k < hi; ++k) {
                auto& cand = candidates[k];
                const long long offset = m - cand.start;
                if (!cand.alive || offset < 0 || offset % c != 0) continue;
                const double d = nse2d::h_distance(u, refs[static_cast<std::size_t>(offset / c)]);
                cand.fiber = std::max(cand.fiber, d);
                if (cand.fiber >= eps_max) cand.alive = false;
            }

            if (m % omega_stride == 0 && rec.t > p.burn_in) {
                forcing.coordinates(rec.t, coords);
                const std::size_t before = omega.clusters();
                omega.add(omega_times.size(), rec.t, [&](std::size_t cl) {
                    const double db = euclid(coords, rep_coords[cl]);
                    if (db >= p.omega_epsilon) return db;
                    return std::max(db, nse2d::h_distance(u, reps[cl]));
                });
                omega_times.push_back(rec.t);
                if (omega.clusters() > before) {
                    reps.push_back(u);
                    rep_coords.push_back(coords);
                }
            }
        }
    } catch (const SolverError& e) {
        result.failure_time = e.time();
        result.inconclusive = true;
        result.note = fmt::format("solver stopped: {}", e.what());
        result.report.classification = recurrence::Classification::unclassified;
        result.report.provenance = json{{"params", to_json(p)}};
        result.omega_limit = omega.finish();
        return result;
    }
    result.omega_limit = omega.finish();

    std::vector<double> joint_sup(count, std::numeric_limits<double>::infinity());
    std::vector<std::optional<double>> fiber_of(count);
    for (const auto& cand : candidates) {
        if (!cand.alive) continue;
        fiber_of[cand.index] = cand.fiber;
        joint_sup[cand.index] = std::max(base_sup[cand.index], cand.fiber);
    }

    const double tau_lo = taus.front();
    const double tau_hi = taus.back();
    const int joint_spu = static_cast<int>(std::llround(1.0 / p.compare_step));
    std::vector<recurrence::EpsilonEvidence> per_eps;
    for (double eps : p.epsilon_ladder) {
        EpsilonJointEvidence ev;
        ev.epsilon = eps;
        ev.base = make_set(eps, base_T, tau_lo, tau_hi, tau_step, p.base_samples_per_unit, taus, base_sup);
        ev.joint = make_set(eps, p.window_T, tau_lo, tau_hi, tau_step, joint_spu, taus, joint_sup);
        ev.base_inclusion_length = recurrence::inclusion_length(ev.base);
        ev.joint_inclusion_length = recurrence::inclusion_length(ev.joint);
        for (const auto& r : recurrence::returns_from_scan(taus, base_sup, eps, false)) {
            const auto i = static_cast<std::size_t>(std::llround((r.tau - tau_lo) / tau_step));
            ev.base_returns.push_back({r.tau, r.windowed_sup, fiber_of[i]});
            if (fiber_of[i] && *fiber_of[i] < eps) ++ev.fiber_near_returns;
        }
        if (!std::includes(ev.base.shifts.begin(), ev.base.shifts.end(), ev.joint.shifts.begin(), ev.joint.shifts.end())) {
            result.joint_subset_of_base = false;
        }

        recurrence::EpsilonEvidence e;
        e.epsilon = eps;
        e.shifts = ev.joint;
        e.inclusion_length = ev.joint_inclusion_length;
        e.returns = recurrence::returns_from_scan(taus, joint_sup, eps, false);
        per_eps.push_back(std::move(e));
        result.evidence.push_back(std::move(ev));
    }

    json provenance{
        {"params", to_json(p)},
        {"domain", "2pi-periodic torus, zero-mean divergence-free velocity (replaces a bounded domain with no-slip walls)"},
        {"convention",
         fmt::format("compact-open, one-sided: fiber sup of |u(s + tau) - u(s)|_H over s in [burn_in, burn_in + 2T] "
                     "every {} time units; base sup of |F(s + tau) - F(s)|_H over s in [0, burn_in + 2T] at {} "
                     "samples per unit; joint distance is the larger of the two",
                     p.compare_step, p.base_samples_per_unit)},
        {"hull", omega0.to_json()},
        {"minimal_set", "omega-limit clusters are a sample of a candidate minimal set, not a certificate"},
        {"segment", "finite post-transient segment; its extension to an entire solution is not computed"}};
    result.report =
        recurrence::assemble_report(std::move(per_eps), std::move(boundedness), p.growth_factor, want_period,
                                    std::nullopt, std::move(provenance));

    using recurrence::Classification;
    const auto cls = result.report.classification;
    if (!omega0.compact_minimal() && (cls == Classification::periodic || cls == Classification::almost_periodic_candidate ||
                                      cls == Classification::recurrent_candidate)) {
        // The base projection of a recurrent pair is recurrent, and a line hull is not compact.
        result.report.classification = Classification::poisson_stable_positive_candidate;
        result.report.period.reset();
        result.report.provenance["classification_cap"] =
            fmt::format("finite-window evidence suggested {}, capped because the forcing hull is a line (non-compact)",
                        recurrence::to_string(cls));
    }
    if (result.evidence.front().base.shifts.empty()) {
        result.inconclusive = true;
        result.note = fmt::format("no base return at epsilon = {} within the horizon; the search is inconclusive",
                                  eps_max);
    }
    double window_sup = 0.0;
    for (const auto& s : result.segment.states) window_sup = std::max(window_sup, nse2d::h_norm(s));
    if (result.forcing_sup == 0.0 && window_sup < p.epsilon_ladder.back()) {
        result.fixed_point = true;
        result.note = fmt::format("zero forcing: the solution decays to the rest state (post-transient |u| <= {}), "
                                  "so every tau is a shift of the fixed point u = 0",
                                  io::fmt17(window_sup));
    }
    return result;
}

SearchResult recurrent_solution_search(const SpectralField& u0, const HullElement& omega0, const SearchParams& params) {
    if (omega0.kind() == HullKind::line) {
        throw InvalidArgument("recurrent_solution_search needs a periodic or quasi-periodic generator");
    }
    const bool periodic = omega0.kind() == HullKind::torus && omega0.phases().size() == 1;
    return joint_search(u0, omega0, params, periodic);
}

PoissonSearchResult poisson_stable_solution_search(const SpectralField& u0, const HullElement& omega0,
                                                   const PoissonSearchParams& params) {
    PoissonSearchParams p = params;
    auto& ladder = p.search.epsilon_ladder;
    if (std::find(ladder.begin(), ladder.end(), p.check_epsilon) == ladder.end()) {
        ladder.push_back(p.check_epsilon);
        std::sort(ladder.begin(), ladder.end(), std::greater<>());
    }

    PoissonSearchResult out;
    out.search.omega0 = omega0;

    const auto shape = omega0.generator().temporal().base_kind() == SignalKind::poisson_example
                           ? AnalyticSignal::poisson_example(std::vector<double>(omega0.signal().output_dim(), 1.0))
                                 .translate(omega0.offset())
                           : omega0.signal();
    out.generator_returns = recurrence::poisson_return_times(
        shape, {p.generator_epsilon, p.generator_window_T, p.generator_horizon, p.generator_tau_step, 64,
                recurrence::WindowMode::two_sided});

    // Precondition: the forcing stays within the configured bound on the solver grid.
    const auto forcing = omega0.forcing();
    nse2d::SolverConfig cfg = p.search.solver;
    cfg.t_end = p.search.horizon;
    const std::size_t steps = cfg.steps();
    double fsup = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) fsup = std::max(fsup, forcing.norm_at(static_cast<double>(k) * cfg.dt));
    out.search.forcing_sup = fsup;
    out.forcing_within_bound = fsup <= p.forcing_bound;
    if (!out.forcing_within_bound) {
        out.hypothesis_violated = true;
        out.search.inconclusive = true;
        out.search.note = fmt::format("forcing sup {} on [0, {}] exceeds the configured bound {}; not run",
                                      io::fmt17(fsup), p.search.horizon, p.forcing_bound);
        out.search.report.provenance = json{{"params", to_json(p.search)}};
        return out;
    }

    out.search = joint_search(u0, omega0, p.search, false);
    auto& s = out.search;
    if (s.failure_time) {
        out.hypothesis_violated = true;
        return out;
    }

    out.enstrophy_within_bound = s.enstrophy_sup <= p.enstrophy_bound;
    const double half = 0.5 * p.search.horizon;
    double first_half = 0.0;
    for (const auto& r : s.series) {
        if (r.t <= half) first_half = std::max(first_half, r.enstrophy);
    }
    double all = 0.0;
    for (const auto& r : s.series) all = std::max(all, r.enstrophy);
    out.enstrophy_growth_ok = all == 0.0 || all <= p.search.growth_factor * first_half;
    out.weakly_regular = out.enstrophy_within_bound && out.enstrophy_growth_ok;

    for (const auto& ev : s.evidence) {
        if (ev.epsilon != p.check_epsilon) continue;
        out.base_returns_at_check = ev.base_returns.size();
        out.fiber_near_returns_at_check = ev.fiber_near_returns;
        for (const auto& r : ev.base_returns) {
            const auto it = std::min_element(s.series.begin(), s.series.end(), [&](const auto& a, const auto& b) {
                return std::abs(a.t - r.tau) < std::abs(b.t - r.tau);
            });
            out.enstrophy_at_returns.push_back(it == s.series.end() ? 0.0 : it->enstrophy);
        }
    }
    out.near_returns_found = out.base_returns_at_check > 0 && out.fiber_near_returns_at_check == out.base_returns_at_check;
    out.hypothesis_violated = !out.weakly_regular;
    return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

json to_json(const EpsilonJointEvidence& ev) {
    json returns = json::array();
    for (const auto& r : ev.base_returns) {
        returns.push_back(json{{"tau", r.tau}, {"base_sup", r.base_sup}, {"fiber_sup", optional_json(r.fiber_sup)}});
    }
    return json{{"epsilon", ev.epsilon},
                {"base_shift_count", ev.base.shifts.size()},
                {"joint_shift_count", ev.joint.shifts.size()},
                {"base_inclusion_length", optional_json(ev.base_inclusion_length)},
                {"joint_inclusion_length", optional_json(ev.joint_inclusion_length)},
                {"base_returns", returns},
                {"fiber_near_returns", ev.fiber_near_returns}};
}

}  // namespace

nlohmann::json to_json(const SearchResult& r) {
    json evidence = json::array();
    for (const auto& ev : r.evidence) evidence.push_back(to_json(ev));
    return json{{"classification", std::string(recurrence::to_string(r.report.classification))},
                {"report", recurrence::to_json(r.report)},
                {"joint_evidence", evidence},
                {"joint_subset_of_base", r.joint_subset_of_base},
                {"omega_limit_sample", recurrence::to_json(r.omega_limit)},
                {"hull", r.omega0.to_json()},
                {"inconclusive", r.inconclusive},
                {"fixed_point", r.fixed_point},
                {"note", r.note},
                {"enstrophy_sup", r.enstrophy_sup},
                {"forcing_sup", r.forcing_sup},
                {"failure_time", optional_json(r.failure_time)}};
}

nlohmann::json to_json(const PoissonSearchResult& r) {
    json gen = json::array();
    for (const auto& g : r.generator_returns) gen.push_back(json{{"tau", g.tau}, {"windowed_sup", g.windowed_sup}});
    json j = to_json(r.search);
    j["hypothesis"] = json{{"forcing_within_bound", r.forcing_within_bound},
                           {"enstrophy_within_bound", r.enstrophy_within_bound},
                           {"enstrophy_growth_ok", r.enstrophy_growth_ok},
                           {"weakly_regular", r.weakly_regular},
                           {"violated", r.hypothesis_violated},
                           {"enstrophy_at_returns", r.enstrophy_at_returns}};
    j["generator_returns"] = gen;
    j["check"] = json{{"base_returns", r.base_returns_at_check},
                      {"fiber_near_returns", r.fiber_near_returns_at_check},
                      {"near_returns_found", r.near_returns_found}};
    j["open_question"] =
        "pre-compactness of the pair along the return sequence is checked in two pieces: base returns of the "
        "forcing and enstrophy bounds of the solution";
    return j;
}

std::string text_summary(const SearchResult& r) {
    std::string out = fmt::format("classification: {}\n", recurrence::to_string(r.report.classification));
    if (r.report.period) out += fmt::format("period: {}\n", io::fmt17(*r.report.period));
    out += fmt::format("hull: {}\n", to_string(r.omega0.kind()));
    for (const auto& ev : r.evidence) {
        out += fmt::format("eps {}: base shifts {}, joint shifts {}, joint l(eps) {}, base returns {}, fiber near-returns {}\n",
                           io::fmt17(ev.epsilon), ev.base.shifts.size(), ev.joint.shifts.size(),
                           ev.joint_inclusion_length ? io::fmt17(*ev.joint_inclusion_length) : std::string("none"),
                           ev.base_returns.size(), ev.fiber_near_returns);
    }
    out += fmt::format("joint shifts within base shifts: {}\n", r.joint_subset_of_base ? "yes" : "no");
    out += fmt::format("omega-limit sample: {} clusters, {} revisited\n", r.omega_limit.clusters_total,
                       r.omega_limit.states.size());
    out += fmt::format("enstrophy sup: {}\n", io::fmt17(r.enstrophy_sup));
    if (r.fixed_point) out += "fixed point: yes\n";
    if (r.inconclusive) out += "inconclusive: yes\n";
    if (!r.note.empty()) out += fmt::format("note: {}\n", r.note);
    return out;
}

std::string text_summary(const PoissonSearchResult& r) {
    std::string out = text_summary(r.search);
    out += fmt::format("forcing within bound: {}\n", r.forcing_within_bound ? "yes" : "no");
    out += fmt::format("weakly regular (enstrophy bounded): {}\n", r.weakly_regular ? "yes" : "no");
    out += fmt::format("base returns at check epsilon: {}, with fiber near-return: {}\n", r.base_returns_at_check,
                       r.fiber_near_returns_at_check);
    std::string gen;
    for (const auto& g : r.generator_returns) gen += (gen.empty() ? "" : ", ") + io::fmt17(g.tau);
    out += fmt::format("generator return times: {}\n", gen.empty() ? std::string("none") : gen);
    return out;
}

}  // namespace recurflow::skewprod
