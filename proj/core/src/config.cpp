#include "recurflow/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "recurflow/errors.hpp"
#include "recurflow/io.hpp"

namespace recurflow::cli {

namespace {

using json = nlohmann::json;
using funcspace::AnalyticSignal;
using funcspace::SignalKind;

constexpr std::array<std::string_view, 5> kSignalSections = {"signal", "constant", "periodic", "quasi_periodic",
                                                             "poisson_example"};
constexpr std::array<std::string_view, 5> kOtherSections = {"", "solver", "forcing", "initial", "analysis"};

bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool valid_name(std::string_view s) { return !s.empty() && std::all_of(s.begin(), s.end(), is_name_char); }

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Strips a trailing comment, leaving '#' inside strings alone.
std::string_view strip_comment(std::string_view s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (in_string && s[i] == '\\') {
            ++i;
        } else if (s[i] == '"') {
            in_string = !in_string;
        } else if (s[i] == '#' && !in_string) {
            return s.substr(0, i);
        }
    }
    return s;
}

std::optional<double> parse_number(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Parses a quoted string at the start of s; returns the remaining text through `rest`.
std::optional<std::string> parse_string(std::string_view s, std::string_view& rest) {
    if (s.empty() || s.front() != '"') return std::nullopt;
    std::string out;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '"') {
            rest = s.substr(i + 1);
            return out;
        }
        if (c == '\\') {
            if (++i == s.size()) return std::nullopt;
            switch (s[i]) {
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            default: return std::nullopt;
            }
        } else {
            out += c;
        }
    }
    return std::nullopt;
}

std::optional<Value> parse_value(std::string_view s, std::string& error) {
    s = trim(s);
    if (s.empty()) {
        error = "missing value";
        return std::nullopt;
    }
    if (s == "true") return Value(true);
    if (s == "false") return Value(false);
    if (s.front() == '"') {
        std::string_view rest;
        auto str = parse_string(s, rest);
        if (!str) {
            error = "unterminated or malformed string";
            return std::nullopt;
        }
        if (!trim(rest).empty()) {
            error = fmt::format("unexpected text after string: '{}'", trim(rest));
            return std::nullopt;
        }
        return Value(std::move(*str));
    }
    if (s.front() == '[') {
        if (s.back() != ']') {
            error = "array must close with ']' on the same line";
            return std::nullopt;
        }
        std::string_view body = trim(s.substr(1, s.size() - 2));
        std::vector<double> numbers;
        std::vector<std::string> strings;
        while (!body.empty()) {
            std::string_view item;
            if (body.front() == '"') {
                std::string_view rest;
                auto str = parse_string(body, rest);
                if (!str) {
                    error = "malformed string in array";
                    return std::nullopt;
                }
                strings.push_back(std::move(*str));
                body = trim(rest);
            } else {
                const auto comma = body.find(',');
                item = trim(body.substr(0, comma));
                auto v = parse_number(item);
                if (!v) {
                    error = fmt::format("array element '{}' is not a finite number or a string", item);
                    return std::nullopt;
                }
                numbers.push_back(*v);
                body = comma == std::string_view::npos ? std::string_view{} : body.substr(comma);
            }
            if (!body.empty()) {
                if (body.front() != ',') {
                    error = fmt::format("expected ',' in array, found '{}'", body);
                    return std::nullopt;
                }
                body = trim(body.substr(1));
                if (body.empty()) {
                    error = "trailing ',' in array";
                    return std::nullopt;
                }
            }
        }
        if (!numbers.empty() && !strings.empty()) {
            error = "array mixes numbers and strings";
            return std::nullopt;
        }
        if (!strings.empty()) return Value(std::move(strings));
        return Value(std::move(numbers));
    }
    if (auto v = parse_number(s)) return Value(*v);
    error = fmt::format("cannot parse value '{}' (strings need double quotes)", s);
    return std::nullopt;
}

std::string where(std::string_view section, std::string_view key) {
    return section.empty() ? std::string(key) : fmt::format("[{}] {}", section, key);
}

std::string_view type_name(const Value& v) {
    switch (v.index()) {
    case 0: return "a boolean";
    case 1: return "a number";
    case 2: return "a string";
    case 3: return "an array of numbers";
    default: return "an array of strings";
    }
}

/// Typed access that records which keys and sections were consumed.
class Reader {
public:
    Reader(const Document& doc, std::vector<std::string>& problems) : doc_(doc), problems_(problems) {}

    bool has(std::string_view section, std::string_view key) const {
        const auto* s = doc_.find(section);
        return s && s->entries.count(std::string(key));
    }

    void use_section(std::string_view section) { sections_.insert(std::string(section)); }

    /// Marks a section and all its keys as consumed.
    void use_all(std::string_view section) {
        use_section(section);
        if (const auto* s = doc_.find(section)) {
            for (const auto& kv : s->entries) used_.insert({std::string(section), kv.first});
        }
    }

    void get(std::string_view section, std::string_view key, double& out) {
        if (const auto* v = fetch(section, key)) {
            if (const auto* d = std::get_if<double>(v)) {
                out = *d;
            } else {
                mismatch(section, key, "a number", *v);
            }
        }
    }

    void get(std::string_view section, std::string_view key, bool& out) {
        if (const auto* v = fetch(section, key)) {
            if (const auto* b = std::get_if<bool>(v)) {
                out = *b;
            } else {
                mismatch(section, key, "a boolean", *v);
            }
        }
    }

    void get(std::string_view section, std::string_view key, std::string& out) {
        if (const auto* v = fetch(section, key)) {
            if (const auto* s = std::get_if<std::string>(v)) {
                out = *s;
            } else {
                mismatch(section, key, "a string", *v);
            }
        }
    }

    void get(std::string_view section, std::string_view key, std::vector<double>& out) {
        if (const auto* v = fetch(section, key)) {
            if (const auto* a = std::get_if<std::vector<double>>(v)) {
                out = *a;
            } else if (const auto* d = std::get_if<double>(v)) {
                out = {*d};
            } else {
                mismatch(section, key, "an array of numbers", *v);
            }
        }
    }

    template <class Int>
    void get_integer(std::string_view section, std::string_view key, Int& out, long long lo) {
        double d = static_cast<double>(out);
        const bool present = has(section, key);
        get(section, key, d);
        if (!present) return;
        if (d != std::floor(d) || d < static_cast<double>(lo) || d > 9.0e15) {
            problems_.push_back(fmt::format("{} must be an integer >= {}, got {}", where(section, key), lo, d));
            return;
        }
        out = static_cast<Int>(d);
    }

    void get_integers(std::string_view section, std::string_view key, std::vector<long long>& out) {
        std::vector<double> raw;
        const bool present = has(section, key);
        get(section, key, raw);
        if (!present) return;
        std::vector<long long> vals;
        for (double d : raw) {
            if (d != std::floor(d) || std::abs(d) > 1e9) {
                problems_.push_back(fmt::format("{} must hold integers, got {}", where(section, key), d));
                return;
            }
            vals.push_back(static_cast<long long>(d));
        }
        out = std::move(vals);
    }

    /// Reports sections and keys that nothing consumed.
    void finish(std::string_view experiment) {
        for (const auto& s : doc_.sections) {
            if (!s.name.empty() && !sections_.count(s.name)) {
                const bool known = std::find(kSignalSections.begin(), kSignalSections.end(), s.name) !=
                                       kSignalSections.end() ||
                                   std::find(kOtherSections.begin(), kOtherSections.end(), s.name) !=
                                       kOtherSections.end();
                problems_.push_back(known ? fmt::format("section [{}] (line {}) is not used by experiment {}",
                                                        s.name, s.line, experiment)
                                          : fmt::format("unknown section [{}] (line {})", s.name, s.line));
                continue;
            }
            for (const auto& [key, entry] : s.entries) {
                if (!used_.count({s.name, key})) {
                    problems_.push_back(fmt::format("unknown key {} (line {}) for experiment {}", where(s.name, key),
                                                    entry.line, experiment));
                }
            }
        }
    }

private:
    const Value* fetch(std::string_view section, std::string_view key) {
        const auto* s = doc_.find(section);
        if (!s) return nullptr;
        auto it = s->entries.find(std::string(key));
        if (it == s->entries.end()) return nullptr;
        used_.insert({std::string(section), std::string(key)});
        return &it->second.value;
    }

    void mismatch(std::string_view section, std::string_view key, std::string_view want, const Value& got) {
        problems_.push_back(fmt::format("{} must be {}, got {}", where(section, key), want, type_name(got)));
    }

    const Document& doc_;
    std::vector<std::string>& problems_;
    std::set<std::string> sections_;
    std::set<std::pair<std::string, std::string>> used_;
};

void require_positive(std::vector<std::string>& problems, std::string_view name, double v) {
    if (!(v > 0.0)) problems.push_back(fmt::format("{} must be positive, got {}", name, v));
}

void require_nonnegative(std::vector<std::string>& problems, std::string_view name, double v) {
    if (!(v >= 0.0)) problems.push_back(fmt::format("{} must be >= 0, got {}", name, v));
}

bool is_multiple(double value, double dt) {
    const double r = value / dt;
    return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

void require_multiple(std::vector<std::string>& problems, std::string_view name, double v, double dt) {
    if (dt > 0.0 && v > 0.0 && !is_multiple(v, dt)) {
        problems.push_back(fmt::format("{} = {} must be a multiple of [solver] dt = {}", name, v, dt));
    }
}

void check_ladder(std::vector<std::string>& problems, std::string_view name, const std::vector<double>& ladder) {
    if (ladder.empty()) {
        problems.push_back(fmt::format("{} must not be empty", name));
        return;
    }
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (!(ladder[i] > 0.0)) problems.push_back(fmt::format("{} entries must be positive, got {}", name, ladder[i]));
        if (i > 0 && !(ladder[i] < ladder[i - 1])) {
            problems.push_back(fmt::format("{} must be strictly decreasing ({} follows {})", name, ladder[i],
                                           ladder[i - 1]));
        }
    }
}

json signal_json(const AnalyticSignal& s) {
    json j{{"kind", std::string(funcspace::to_string(s.base_kind()))},
           {"amplitudes", std::vector<double>(s.amplitudes().begin(), s.amplitudes().end())},
           {"base_shift", s.base_shift()}};
    if (!s.frequencies().empty()) {
        j["frequencies"] = std::vector<double>(s.frequencies().begin(), s.frequencies().end());
        j["phase_offsets"] = std::vector<double>(s.phase_offsets().begin(), s.phase_offsets().end());
    }
    return j;
}

std::string_view initial_name(InitialCondition::Kind k) {
    switch (k) {
    case InitialCondition::Kind::zero: return "zero";
    case InitialCondition::Kind::random: return "random";
    case InitialCondition::Kind::kolmogorov: return "kolmogorov";
    }
    return "zero";
}

/// Reads the single signal declaration: [signal] with `kind`, or a section named after the kind.
std::optional<AnalyticSignal> read_signal(Reader& r, const Document& doc, std::vector<std::string>& problems) {
    std::vector<const Section*> found;
    for (auto name : kSignalSections) {
        if (const auto* s = doc.find(name)) found.push_back(s);
    }
    if (found.empty()) {
        problems.push_back("missing signal declaration: add [signal] with kind = \"...\" or a section named after "
                           "the kind, e.g. [periodic]");
        return std::nullopt;
    }
    if (found.size() > 1) {
        std::string list;
        for (const auto* s : found) list += fmt::format("{}[{}] (line {})", list.empty() ? "" : ", ", s->name, s->line);
        problems.push_back(fmt::format("ambiguous signal declaration: {}; declare exactly one", list));
        for (const auto* s : found) r.use_all(s->name);
        return std::nullopt;
    }
    const std::string sec = found.front()->name;
    r.use_section(sec);
    std::string kind_name = sec;
    if (sec == "signal") {
        kind_name.clear();
        r.get(sec, "kind", kind_name);
        if (kind_name.empty()) {
            problems.push_back("[signal] kind is required (constant, periodic, quasi_periodic, poisson_example)");
            return std::nullopt;
        }
    }
    const auto kind = funcspace::parse_signal_kind(kind_name);
    if (!kind || *kind == SignalKind::shifted) {
        problems.push_back(fmt::format("[{}] kind = \"{}\" is not a signal kind (constant, periodic, "
                                       "quasi_periodic, poisson_example)",
                                       sec, kind_name));
        return std::nullopt;
    }
    std::vector<double> amplitudes = {1.0};
    double shift = 0.0;
    r.get(sec, "amplitudes", amplitudes);
    r.get(sec, "shift", shift);
    try {
        std::optional<AnalyticSignal> s;
        switch (*kind) {
        case SignalKind::constant: s = AnalyticSignal::constant(amplitudes); break;
        case SignalKind::periodic: {
            double frequency = 1.0;
            double phase = 0.0;
            r.get(sec, "frequency", frequency);
            r.get(sec, "phase", phase);
            s = AnalyticSignal::periodic(amplitudes, frequency, phase);
            break;
        }
        case SignalKind::quasi_periodic: {
            std::vector<double> frequencies;
            std::vector<double> phases;
            if (!r.has(sec, "frequencies")) {
                problems.push_back(fmt::format("[{}] frequencies is required for a quasi_periodic signal", sec));
                return std::nullopt;
            }
            r.get(sec, "frequencies", frequencies);
            r.get(sec, "phases", phases);
            s = AnalyticSignal::quasi_periodic(amplitudes, frequencies, phases);
            break;
        }
        case SignalKind::poisson_example: s = AnalyticSignal::poisson_example(amplitudes); break;
        case SignalKind::shifted: break;
        }
        if (s && shift != 0.0) s = s->translate(shift);
        return s;
    } catch (const Error& e) {
        problems.push_back(fmt::format("[{}] {}", sec, e.what()));
        return std::nullopt;
    }
}

void read_solver(Reader& r, nse2d::SolverConfig& cfg, bool with_t_end, std::vector<std::string>& problems,
                 std::vector<std::string>& warnings) {
    r.use_section("solver");
    r.get("solver", "nu", cfg.nu);
    r.get_integer("solver", "n", cfg.n, 4);
    r.get("solver", "dt", cfg.dt);
    r.get("solver", "dealias", cfg.dealias);
    if (with_t_end) r.get("solver", "t_end", cfg.t_end);
    std::string startup(nse2d::to_string(cfg.startup));
    r.get("solver", "startup", startup);
    if (startup == "heun") {
        cfg.startup = nse2d::Startup::heun;
    } else if (startup == "euler") {
        cfg.startup = nse2d::Startup::euler;
    } else {
        problems.push_back(fmt::format("[solver] startup must be \"heun\" or \"euler\", got \"{}\"", startup));
    }
    r.get("solver", "energy_ceiling", cfg.energy_ceiling);
    try {
        for (auto& w : cfg.validate()) warnings.push_back("[solver] " + w);
    } catch (const ConfigError& e) {
        for (const auto& p : e.problems()) problems.push_back("[solver] " + p);
    }
}

void read_forcing(Reader& r, ExperimentConfig& c, std::vector<std::string>& problems) {
    r.use_section("forcing");
    std::vector<long long> flat;
    r.get_integers("forcing", "modes", flat);
    if (!flat.empty()) {
        if (flat.size() % 2 != 0) {
            problems.push_back("[forcing] modes must list kx, ky pairs (even length)");
        } else {
            c.forcing_modes.clear();
            for (std::size_t i = 0; i < flat.size(); i += 2) {
                c.forcing_modes.push_back({static_cast<int>(flat[i]), static_cast<int>(flat[i + 1])});
            }
        }
    } else if (r.has("forcing", "modes")) {
        problems.push_back("[forcing] modes must not be empty");
    }
    c.forcing_weights.assign(c.forcing_modes.size(), 1.0);
    r.get("forcing", "weights", c.forcing_weights);
    std::vector<long long> comps;
    r.get_integers("forcing", "components", comps);
    c.forcing_components.assign(comps.begin(), comps.end());
    if (c.forcing_weights.size() != c.forcing_modes.size()) {
        problems.push_back(fmt::format("[forcing] weights has {} entries for {} modes", c.forcing_weights.size(),
                                       c.forcing_modes.size()));
    }
    if (!c.forcing_components.empty() && c.forcing_components.size() != c.forcing_modes.size()) {
        problems.push_back(fmt::format("[forcing] components has {} entries for {} modes",
                                       c.forcing_components.size(), c.forcing_modes.size()));
    }
    if (std::any_of(comps.begin(), comps.end(), [](long long v) { return v < 0; })) {
        problems.push_back("[forcing] components must be >= 0");
    }
}

void read_initial(Reader& r, InitialCondition& ic, std::vector<std::string>& problems) {
    r.use_section("initial");
    std::string kind(initial_name(ic.kind));
    r.get("initial", "kind", kind);
    if (kind == "zero") {
        ic.kind = InitialCondition::Kind::zero;
    } else if (kind == "random") {
        ic.kind = InitialCondition::Kind::random;
        r.get("initial", "energy", ic.energy);
        r.get_integer("initial", "kmax", ic.kmax, 1);
        require_nonnegative(problems, "[initial] energy", ic.energy);
    } else if (kind == "kolmogorov") {
        ic.kind = InitialCondition::Kind::kolmogorov;
        ic.energy = 1.0;
        r.get("initial", "amplitude", ic.energy);
    } else {
        problems.push_back(
            fmt::format("[initial] kind must be \"zero\", \"random\" or \"kolmogorov\", got \"{}\"", kind));
    }
}

void read_search(Reader& r, skewprod::SearchParams& p, std::vector<std::string>& problems) {
    const std::string_view a = "analysis";
    r.use_section(a);
    r.get(a, "horizon", p.horizon);
    r.get(a, "burn_in", p.burn_in);
    r.get(a, "epsilon_ladder", p.epsilon_ladder);
    r.get(a, "window_T", p.window_T);
    r.get(a, "tau_min", p.tau_min);
    r.get(a, "tau_max", p.tau_max);
    r.get(a, "tau_step", p.tau_step);
    r.get(a, "compare_step", p.compare_step);
    r.get_integer(a, "base_samples_per_unit", p.base_samples_per_unit, 1);
    r.get(a, "boundedness_horizons", p.boundedness_horizons);
    r.get(a, "growth_factor", p.growth_factor);
    r.get(a, "omega_epsilon", p.omega_epsilon);
    r.get(a, "omega_step", p.omega_step);

    check_ladder(problems, "[analysis] epsilon_ladder", p.epsilon_ladder);
    require_positive(problems, "[analysis] horizon", p.horizon);
    require_nonnegative(problems, "[analysis] burn_in", p.burn_in);
    require_positive(problems, "[analysis] window_T", p.window_T);
    require_positive(problems, "[analysis] tau_min", p.tau_min);
    require_nonnegative(problems, "[analysis] tau_max", p.tau_max);
    require_nonnegative(problems, "[analysis] tau_step", p.tau_step);
    require_positive(problems, "[analysis] compare_step", p.compare_step);
    require_positive(problems, "[analysis] growth_factor", p.growth_factor);
    require_positive(problems, "[analysis] omega_epsilon", p.omega_epsilon);
    require_positive(problems, "[analysis] omega_step", p.omega_step);
    for (double h : p.boundedness_horizons) require_positive(problems, "[analysis] boundedness_horizons entries", h);
    const double dt = p.solver.dt;
    require_multiple(problems, "[analysis] tau_step", p.tau_step, dt);
    require_multiple(problems, "[analysis] compare_step", p.compare_step, dt);
    require_multiple(problems, "[analysis] horizon", p.horizon, dt);
    require_multiple(problems, "[analysis] burn_in", p.burn_in, dt);
    const double span = p.burn_in + 2.0 * p.window_T;
    const double tau_max = p.tau_max > 0.0 ? p.tau_max : p.horizon - span;
    if (!(tau_max > p.tau_min)) {
        problems.push_back(fmt::format("[analysis] tau range is empty: tau_max = {} (horizon - burn_in - 2 window_T "
                                       "when 0) must exceed tau_min = {}",
                                       tau_max, p.tau_min));
    } else if (tau_max + span > p.horizon + 1e-9) {
        problems.push_back(fmt::format("[analysis] tau_max = {} needs a horizon of at least {}", tau_max,
                                       tau_max + span));
    }
}

void read_classify(Reader& r, ClassifySettings& s, std::vector<std::string>& problems) {
    const std::string_view a = "analysis";
    auto& p = s.params;
    r.use_section(a);
    r.get(a, "epsilon_ladder", s.epsilon_ladder);
    r.get(a, "window_T", p.window_T);
    r.get(a, "tau_min", p.tau_min);
    r.get(a, "tau_max", p.tau_max);
    r.get(a, "tau_step", p.tau_step);
    r.get_integer(a, "samples_per_unit", p.samples_per_unit, 1);
    std::string window(recurrence::to_string(p.window));
    r.get(a, "window", window);
    if (window == "two_sided") {
        p.window = recurrence::WindowMode::two_sided;
    } else if (window == "one_sided") {
        p.window = recurrence::WindowMode::one_sided;
    } else {
        problems.push_back(
            fmt::format("[analysis] window must be \"two_sided\" or \"one_sided\", got \"{}\"", window));
    }
    r.get(a, "horizons", p.horizons);
    r.get(a, "growth_factor", p.growth_factor);
    r.get(a, "return_horizon", p.return_horizon);
    r.get(a, "detect_period", p.detect_period);
    r.get(a, "probe_offsets", s.probe_offsets);
    if (!s.probe_offsets.empty()) {
        r.get(a, "probe_deltas", p.probe_deltas);
        r.get(a, "probe_epsilon", p.probe.epsilon);
        r.get(a, "probe_horizon", p.probe.horizon);
        r.get(a, "probe_scan_step", p.probe.scan_step);
        p.probe.window_T = p.window_T;
        p.probe.samples_per_unit = p.samples_per_unit;
        if (s.probe_offsets.size() < 2) problems.push_back("[analysis] probe_offsets needs at least two translates");
        if (p.probe_deltas.empty()) problems.push_back("[analysis] probe_deltas must not be empty when probing");
    }

    check_ladder(problems, "[analysis] epsilon_ladder", s.epsilon_ladder);
    require_positive(problems, "[analysis] window_T", p.window_T);
    require_positive(problems, "[analysis] tau_step", p.tau_step);
    require_nonnegative(problems, "[analysis] return_horizon", p.return_horizon);
    require_positive(problems, "[analysis] growth_factor", p.growth_factor);
    if (!(p.tau_max > p.tau_min)) {
        problems.push_back(
            fmt::format("[analysis] tau_max = {} must exceed tau_min = {}", p.tau_max, p.tau_min));
    }
    const double return_horizon = p.return_horizon > 0.0 ? p.return_horizon : p.tau_max;
    if (!(return_horizon > p.window_T)) {
        problems.push_back(fmt::format("[analysis] return horizon {} (return_horizon, else tau_max) must exceed "
                                       "window_T = {}",
                                       return_horizon, p.window_T));
    }
    if (p.horizons.empty()) problems.push_back("[analysis] horizons must not be empty");
    for (std::size_t i = 0; i < p.horizons.size(); ++i) {
        require_positive(problems, "[analysis] horizons entries", p.horizons[i]);
        if (i > 0 && !(p.horizons[i] > p.horizons[i - 1])) {
            problems.push_back("[analysis] horizons must be increasing");
        }
    }
}

void read_verify(Reader& r, experiments::VerifyParams& p, std::vector<std::string>& problems) {
    const std::string_view a = "analysis";
    r.use_section(a);
    r.get(a, "kolmogorov_amplitude", p.kolmogorov_amplitude);
    r.get_integer(a, "kolmogorov_stride", p.kolmogorov_stride, 1);
    r.get(a, "decay_tolerance", p.decay_tolerance);
    r.get(a, "dt_ladder", p.dt_ladder);
    r.get(a, "min_order_ratio", p.min_order_ratio);
    r.get(a, "steady_amplitude", p.steady_amplitude);
    r.get(a, "steady_time", p.steady_time);
    r.get(a, "steady_dt", p.steady_dt);
    r.get(a, "steady_tolerance", p.steady_tolerance);
    r.get(a, "gronwall", p.gronwall);
    r.get(a, "gronwall_horizon", p.gronwall_horizon);
    r.get(a, "gronwall_dt", p.gronwall_dt);
    r.get(a, "gronwall_nu", p.gronwall_nu);
    r.get(a, "gronwall_initial_energy", p.gronwall_initial_energy);
    r.get(a, "gronwall_slack", p.gronwall_slack);

    if (p.dt_ladder.size() < 2) problems.push_back("[analysis] dt_ladder needs at least two step sizes");
    for (double dt : p.dt_ladder) require_positive(problems, "[analysis] dt_ladder entries", dt);
    require_positive(problems, "[analysis] decay_tolerance", p.decay_tolerance);
    require_positive(problems, "[analysis] min_order_ratio", p.min_order_ratio);
    require_positive(problems, "[analysis] steady_time", p.steady_time);
    require_positive(problems, "[analysis] steady_dt", p.steady_dt);
    require_positive(problems, "[analysis] steady_tolerance", p.steady_tolerance);
    require_positive(problems, "[analysis] gronwall_horizon", p.gronwall_horizon);
    require_positive(problems, "[analysis] gronwall_dt", p.gronwall_dt);
    require_positive(problems, "[analysis] gronwall_nu", p.gronwall_nu);
    require_nonnegative(problems, "[analysis] gronwall_initial_energy", p.gronwall_initial_energy);
    require_nonnegative(problems, "[analysis] gronwall_slack", p.gronwall_slack);
}

void read_poisson(Reader& r, skewprod::PoissonSearchParams& p, std::vector<std::string>& problems) {
    const std::string_view a = "analysis";
    r.get(a, "check_epsilon", p.check_epsilon);
    r.get(a, "enstrophy_bound", p.enstrophy_bound);
    r.get(a, "forcing_bound", p.forcing_bound);
    r.get(a, "generator_epsilon", p.generator_epsilon);
    r.get(a, "generator_window_T", p.generator_window_T);
    r.get(a, "generator_horizon", p.generator_horizon);
    r.get(a, "generator_tau_step", p.generator_tau_step);
    require_positive(problems, "[analysis] check_epsilon", p.check_epsilon);
    require_positive(problems, "[analysis] enstrophy_bound", p.enstrophy_bound);
    require_positive(problems, "[analysis] forcing_bound", p.forcing_bound);
    require_positive(problems, "[analysis] generator_epsilon", p.generator_epsilon);
    require_positive(problems, "[analysis] generator_window_T", p.generator_window_T);
    require_positive(problems, "[analysis] generator_horizon", p.generator_horizon);
    require_positive(problems, "[analysis] generator_tau_step", p.generator_tau_step);
}

void read_cocycle(Reader& r, CocycleSettings& c, double dt, std::vector<std::string>& problems) {
    const std::string_view a = "analysis";
    r.use_section(a);
    r.get(a, "t", c.t);
    r.get(a, "tau", c.tau);
    r.get(a, "tolerance", c.tolerance);
    r.get_integer(a, "trajectory_stride", c.trajectory_stride, 1);
    require_nonnegative(problems, "[analysis] t", c.t);
    require_nonnegative(problems, "[analysis] tau", c.tau);
    require_positive(problems, "[analysis] tolerance", c.tolerance);
    require_multiple(problems, "[analysis] t", c.t, dt);
    require_multiple(problems, "[analysis] tau", c.tau, dt);
}

}  // namespace

std::string_view to_string(Experiment e) {
    switch (e) {
    case Experiment::classify_signal: return "classify_signal";
    case Experiment::solver_verify: return "solver_verify";
    case Experiment::recurrent_search: return "recurrent_search";
    case Experiment::poisson_search: return "poisson_search";
    case Experiment::cocycle_check: return "cocycle_check";
    }
    return "unknown";
}

std::optional<Experiment> parse_experiment(std::string_view name) {
    for (auto e : {Experiment::classify_signal, Experiment::solver_verify, Experiment::recurrent_search,
                   Experiment::poisson_search, Experiment::cocycle_check}) {
        if (to_string(e) == name) return e;
    }
    return std::nullopt;
}

const Section* Document::find(std::string_view name) const {
    for (const auto& s : sections) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

Document parse_document(std::string_view text) {
    Document doc;
    doc.sections.push_back(Section{"", 0, {}});
    std::vector<std::string> problems;
    Section* current = &doc.sections.front();
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        const std::string_view raw = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        const std::string_view line = trim(strip_comment(raw));
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                problems.push_back(fmt::format("line {}: section header must end with ']'", line_no));
            } else {
                const std::string name(trim(line.substr(1, line.size() - 2)));
                if (!valid_name(name)) {
                    problems.push_back(fmt::format("line {}: invalid section name '{}'", line_no, name));
                } else if (const auto* prev = doc.find(name)) {
                    problems.push_back(
                        fmt::format("line {}: section [{}] repeats line {}", line_no, name, prev->line));
                } else {
                    doc.sections.push_back(Section{name, line_no, {}});
                    current = &doc.sections.back();
                }
            }
        } else {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                problems.push_back(fmt::format("line {}: expected 'key = value' or '[section]'", line_no));
            } else {
                const std::string key(trim(line.substr(0, eq)));
                std::string error;
                auto value = parse_value(line.substr(eq + 1), error);
                if (!valid_name(key)) {
                    problems.push_back(fmt::format("line {}: invalid key '{}'", line_no, key));
                } else if (!value) {
                    problems.push_back(fmt::format("line {}: {}: {}", line_no, where(current->name, key), error));
                } else if (auto it = current->entries.find(key); it != current->entries.end()) {
                    problems.push_back(fmt::format("line {}: {} repeats line {}", line_no, where(current->name, key),
                                                   it->second.line));
                } else {
                    current->entries.emplace(key, Entry{std::move(*value), line_no});
                }
            }
        }
        if (end == text.size()) break;
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return doc;
}

nlohmann::json to_json(const Value& value) {
    return std::visit([](const auto& v) { return json(v); }, value);
}

nlohmann::json to_json(const Document& doc) {
    json out = json::object();
    for (const auto& s : doc.sections) {
        json entries = json::object();
        for (const auto& [key, entry] : s.entries) entries[key] = to_json(entry.value);
        if (s.name.empty()) {
            for (auto& [k, v] : entries.items()) out[k] = v;
        } else {
            out[s.name] = entries;
        }
    }
    return out;
}

nse2d::SpectralField make_initial(const InitialCondition& ic, int n, std::uint64_t seed) {
    switch (ic.kind) {
    case InitialCondition::Kind::zero: return nse2d::SpectralField(n);
    case InitialCondition::Kind::random: return experiments::random_field_with_energy(n, seed, ic.kmax, ic.energy);
    case InitialCondition::Kind::kolmogorov: return nse2d::kolmogorov_mode(n, ic.energy);
    }
    return nse2d::SpectralField(n);
}

nse2d::ForcingField ExperimentConfig::forcing() const {
    if (!signal) throw InvalidArgument("experiment has no forcing signal");
    return nse2d::shear_pattern(forcing_modes, forcing_weights, *signal, forcing_components);
}

nlohmann::json ExperimentConfig::echo() const {
    json resolved{{"experiment", std::string(to_string(experiment))}, {"seed", seed}};
    if (signal) resolved["signal"] = signal_json(*signal);
    switch (experiment) {
    case Experiment::classify_signal: {
        const auto& p = classify.params;
        resolved["analysis"] = json{{"epsilon_ladder", classify.epsilon_ladder},
                                    {"window_T", p.window_T},
                                    {"tau_min", p.tau_min},
                                    {"tau_max", p.tau_max},
                                    {"tau_step", p.tau_step},
                                    {"samples_per_unit", p.samples_per_unit},
                                    {"window", std::string(recurrence::to_string(p.window))},
                                    {"horizons", p.horizons},
                                    {"growth_factor", p.growth_factor},
                                    {"return_horizon", p.return_horizon},
                                    {"detect_period", p.detect_period},
                                    {"probe_offsets", classify.probe_offsets},
                                    {"probe_deltas", p.probe_deltas}};
        break;
    }
    case Experiment::solver_verify: {
        const auto& p = verify;
        resolved["solver"] = nse2d::to_json(p.solver);
        resolved["analysis"] = json{{"kolmogorov_amplitude", p.kolmogorov_amplitude},
                                    {"kolmogorov_stride", p.kolmogorov_stride},
                                    {"decay_tolerance", p.decay_tolerance},
                                    {"dt_ladder", p.dt_ladder},
                                    {"min_order_ratio", p.min_order_ratio},
                                    {"steady_amplitude", p.steady_amplitude},
                                    {"steady_time", p.steady_time},
                                    {"steady_dt", p.steady_dt},
                                    {"steady_tolerance", p.steady_tolerance},
                                    {"gronwall", p.gronwall},
                                    {"gronwall_horizon", p.gronwall_horizon},
                                    {"gronwall_dt", p.gronwall_dt},
                                    {"gronwall_nu", p.gronwall_nu},
                                    {"gronwall_initial_energy", p.gronwall_initial_energy},
                                    {"gronwall_slack", p.gronwall_slack}};
        break;
    }
    case Experiment::recurrent_search:
    case Experiment::poisson_search:
    case Experiment::cocycle_check: {
        resolved["solver"] = nse2d::to_json(experiment == Experiment::cocycle_check ? solver : search.search.solver);
        resolved["forcing"] = forcing().describe();
        resolved["initial"] = json{{"kind", std::string(initial_name(initial.kind))},
                                   {"energy", initial.energy},
                                   {"kmax", initial.kmax}};
        if (experiment == Experiment::cocycle_check) {
            resolved["analysis"] = json{{"t", cocycle.t},
                                        {"tau", cocycle.tau},
                                        {"tolerance", cocycle.tolerance},
                                        {"trajectory_stride", cocycle.trajectory_stride}};
        } else {
            auto a = skewprod::to_json(search.search);
            a.erase("solver");
            if (experiment == Experiment::poisson_search) {
                a["check_epsilon"] = search.check_epsilon;
                a["enstrophy_bound"] = search.enstrophy_bound;
                a["forcing_bound"] = search.forcing_bound;
                a["generator_epsilon"] = search.generator_epsilon;
                a["generator_window_T"] = search.generator_window_T;
                a["generator_horizon"] = search.generator_horizon;
                a["generator_tau_step"] = search.generator_tau_step;
            }
            resolved["analysis"] = a;
        }
        break;
    }
    }
    return json{{"source", source.generic_string()}, {"document", to_json(document)}, {"resolved", resolved}};
}

ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& source) {
    ExperimentConfig c;
    c.source = source;
    c.document = parse_document(text);
    std::vector<std::string> problems;
    Reader r(c.document, problems);

    std::string name;
    if (!r.has("", "experiment")) {
        throw ConfigError({"experiment is required (classify_signal, solver_verify, recurrent_search, "
                           "poisson_search, cocycle_check)"});
    }
    r.get("", "experiment", name);
    if (!problems.empty()) throw ConfigError(problems);
    const auto experiment = parse_experiment(name);
    if (!experiment) {
        throw ConfigError({fmt::format("unknown experiment \"{}\" (expected classify_signal, solver_verify, "
                                       "recurrent_search, poisson_search or cocycle_check)",
                                       name)});
    }
    c.experiment = *experiment;
    r.get_integer("", "seed", c.seed, 0);
    std::string out;
    r.get("", "output_dir", out);
    c.output_dir = out;

    switch (c.experiment) {
    case Experiment::classify_signal:
        c.signal = read_signal(r, c.document, problems);
        read_classify(r, c.classify, problems);
        break;
    case Experiment::solver_verify:
        read_solver(r, c.verify.solver, true, problems, c.warnings);
        read_verify(r, c.verify, problems);
        c.verify.seed = c.seed;
        c.solver = c.verify.solver;
        break;
    case Experiment::recurrent_search:
    case Experiment::poisson_search:
    case Experiment::cocycle_check: {
        const bool poisson = c.experiment == Experiment::poisson_search;
        const bool cocycle = c.experiment == Experiment::cocycle_check;
        c.solver = cocycle ? nse2d::SolverConfig{0.5, 32, 1e-3, true, 1.0, nse2d::Startup::heun, 0.0}
                           : nse2d::SolverConfig{1.0, 64, 1e-2, true, 0.0, nse2d::Startup::heun, 0.0};
        if (poisson) {
            c.forcing_modes = {{0, 1}};
            c.search.search.horizon = 2000.0;
        } else {
            c.forcing_modes = {{0, 1}, {1, 1}};
        }
        if (cocycle) c.initial = InitialCondition{InitialCondition::Kind::random, 0.25, 4};
        c.signal = read_signal(r, c.document, problems);
        read_solver(r, c.solver, false, problems, c.warnings);
        read_forcing(r, c, problems);
        read_initial(r, c.initial, problems);
        if (cocycle) {
            read_cocycle(r, c.cocycle, c.solver.dt, problems);
            c.solver.t_end = c.cocycle.t + c.cocycle.tau;
        } else {
            c.search.search.solver = c.solver;
            read_search(r, c.search.search, problems);
            if (poisson) read_poisson(r, c.search, problems);
            c.search.search.solver.t_end = c.search.search.horizon;
        }
        if (c.signal && problems.empty()) {
            try {
                c.forcing().check_grid(c.solver.n);
            } catch (const Error& e) {
                problems.push_back(fmt::format("[forcing] {}", e.what()));
            }
        }
        break;
    }
    }
    r.finish(name);
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw ConfigError({fmt::format("config file {} does not exist or is not a regular file", path.string())});
    }
    return parse_config_text(io::read_text(path), path);
}

}  // namespace recurflow::cli
