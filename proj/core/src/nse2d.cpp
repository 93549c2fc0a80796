#include "recurflow/nse2d.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "recurflow/errors.hpp"
#include "recurflow/io.hpp"

namespace recurflow::nse2d {

namespace {

using json = nlohmann::json;

constexpr std::string_view kTrajectoryFormat = "recurflow-trajectory";
constexpr std::string_view kLayout = "little-endian float64 pairs (re, im); order sample, component, ix, iy";
constexpr std::string_view kDomain = "2pi-periodic torus, zero-mean divergence-free velocity";

json complex_pair(Complex z) { return json::array({z.real(), z.imag()}); }

Startup parse_startup(const std::string& s) {
    if (s == "euler") return Startup::euler;
    if (s == "heun") return Startup::heun;
    throw InvalidArgument(fmt::format("unknown startup scheme '{}'", s));
}

SolverConfig config_from_json(const json& j) {
    SolverConfig cfg;
    cfg.nu = j.at("nu").get<double>();
    cfg.n = j.at("n").get<int>();
    cfg.dt = j.at("dt").get<double>();
    cfg.dealias = j.at("dealias").get<bool>();
    cfg.t_end = j.at("t_end").get<double>();
    cfg.startup = parse_startup(j.at("startup").get<std::string>());
    cfg.energy_ceiling = j.at("energy_ceiling").get<double>();
    return cfg;
}

void put_le(std::string& buf, double x) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) {
        buf.push_back(static_cast<char>(bits & 0xffU));
        bits >>= 8;
    }
}

double get_le(const char* p) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(p[b]);
    return std::bit_cast<double>(bits);
}

json file_entry(const std::filesystem::path& path) {
    return json{{"name", path.filename().string()},
                {"sha256", io::sha256_file(path)},
                {"bytes", std::filesystem::file_size(path)}};
}

}  // namespace

std::string_view to_string(Startup s) { return s == Startup::euler ? "euler" : "heun"; }

// ---------------------------------------------------------------------------
// SolverConfig

std::vector<std::string> SolverConfig::validate() const {
    std::vector<std::string> problems;
    if (!(nu > 0.0) || !std::isfinite(nu)) problems.push_back(fmt::format("nu must be positive, got {}", nu));
    if (!(dt > 0.0) || !std::isfinite(dt)) problems.push_back(fmt::format("dt must be positive, got {}", dt));
    if (n < 4 || (n & (n - 1)) != 0) problems.push_back(fmt::format("n must be a power of two >= 4, got {}", n));
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) problems.push_back(fmt::format("t_end must be >= 0, got {}", t_end));
    if (!(energy_ceiling >= 0.0)) problems.push_back(fmt::format("energy_ceiling must be >= 0, got {}", energy_ceiling));
    if (!problems.empty()) throw ConfigError(problems);

    std::vector<std::string> warnings;
    const double kmax = n / 2.0;
    const double stiffness = dt * nu * kmax * kmax;
    if (stiffness > 1.0) {
        warnings.push_back(fmt::format(
            "dt*nu*(n/2)^2 = {:.3g} > 1; diffusion is integrated exactly, but explicit terms may be under-resolved",
            stiffness));
    }
    const double ratio = t_end / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
        warnings.push_back(fmt::format("t_end = {} is not a multiple of dt = {}; rounding to {} steps", t_end, dt,
                                       steps()));
    }
    return warnings;
}

std::size_t SolverConfig::steps() const { return static_cast<std::size_t>(std::llround(t_end / dt)); }

nlohmann::json to_json(const SolverConfig& cfg) {
    return json{{"nu", cfg.nu},
                {"n", cfg.n},
                {"dt", cfg.dt},
                {"dealias", cfg.dealias},
                {"t_end", cfg.t_end},
                {"startup", std::string(to_string(cfg.startup))},
                {"energy_ceiling", cfg.energy_ceiling}};
}

// ---------------------------------------------------------------------------
// Forcing

ForcingMode::ForcingMode(int kx_, int ky_, Complex ax, Complex ay, std::size_t component_)
    : kx(kx_), ky(ky_), component(component_) {
    if (kx == 0 && ky == 0) throw InvalidArgument("forcing mode k = 0 is not allowed (fields have zero mean)");
    if (ky < 0 || (ky == 0 && kx < 0)) {
        kx = -kx;
        ky = -ky;
        ax = std::conj(ax);
        ay = std::conj(ay);
    }
    const double k2 = double(kx) * kx + double(ky) * ky;
    const Complex kdot = (double(kx) * ax + double(ky) * ay) / k2;
    amplitude[0] = ax - double(kx) * kdot;
    amplitude[1] = ay - double(ky) * kdot;
}

ForcingMode ForcingMode::shear(int kx, int ky, double amp, std::size_t component, double phase) {
    const double k = std::hypot(double(kx), double(ky));
    if (k == 0.0) throw InvalidArgument("forcing mode k = 0 is not allowed (fields have zero mean)");
    // sqrt(2) a sin(theta) = (a / sqrt(2)) (-i) e^{i theta} + c.c.
    const Complex c = amp * Complex(0.0, -1.0 / std::sqrt(2.0)) * std::polar(1.0, phase);
    return ForcingMode(kx, ky, c * (ky / k), c * (-kx / k), component);
}

ForcingField::ForcingField() : temporal_(funcspace::AnalyticSignal::constant({0.0})) {}

ForcingField::ForcingField(std::vector<ForcingMode> modes, funcspace::AnalyticSignal temporal)
    : modes_(std::move(modes)), temporal_(std::move(temporal)) {
    for (auto& m : modes_) {
        if (m.component >= temporal_.output_dim()) {
            throw InvalidArgument(fmt::format("forcing mode ({}, {}) uses temporal component {} of a {}-dim signal",
                                              m.kx, m.ky, m.component, temporal_.output_dim()));
        }
        m = ForcingMode(m.kx, m.ky, m.amplitude[0], m.amplitude[1], m.component);
    }
    const std::size_t count = modes_.size();
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t slot = wavevectors_;
        for (std::size_t j = 0; j < i; ++j) {
            if (modes_[j].kx == modes_[i].kx && modes_[j].ky == modes_[i].ky) slot = slot_of_mode_[j];
        }
        if (slot == wavevectors_) ++wavevectors_;
        slot_of_mode_.push_back(slot);
    }
    gram_.assign(count * count, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < count; ++j) {
            const auto& a = modes_[i];
            const auto& b = modes_[j];
            if (a.kx != b.kx || a.ky != b.ky) continue;
            double g = 0.0;
            for (int c = 0; c < 2; ++c) g += 2.0 * (a.amplitude[c] * std::conj(b.amplitude[c])).real();
            gram_[i * count + j] = g;
        }
    }
}

ForcingField ForcingField::with_temporal(funcspace::AnalyticSignal temporal) const {
    return ForcingField(modes_, std::move(temporal));
}

void ForcingField::mode_weights(double t, std::span<double> out) const {
    std::vector<double> values(temporal_.output_dim());
    temporal_.evaluate(t, values);
    for (std::size_t i = 0; i < modes_.size(); ++i) out[i] = values[modes_[i].component];
}

double ForcingField::norm_of_weights(std::span<const double> w) const {
    const std::size_t count = modes_.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < count; ++j) acc += w[i] * w[j] * gram_[i * count + j];
    }
    return std::sqrt(std::max(acc, 0.0));
}

double ForcingField::norm_at(double t) const {
    std::vector<double> w(modes_.size());
    mode_weights(t, w);
    return norm_of_weights(w);
}

void ForcingField::coordinates(double t, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (modes_.empty()) return;
    std::vector<double> w(modes_.size());
    mode_weights(t, w);
    const double r2 = std::sqrt(2.0);
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        double* q = out.data() + 4 * slot_of_mode_[i];
        for (int c = 0; c < 2; ++c) {
            q[2 * c] += r2 * w[i] * modes_[i].amplitude[c].real();
            q[2 * c + 1] += r2 * w[i] * modes_[i].amplitude[c].imag();
        }
    }
}

void ForcingField::check_grid(int n) const {
    for (const auto& m : modes_) {
        if (std::abs(m.kx) >= n / 2 || m.ky >= n / 2) {
            throw InvalidArgument(fmt::format("forcing mode ({}, {}) does not fit an n = {} grid", m.kx, m.ky, n));
        }
    }
}

void ForcingField::evaluate(double t, SpectralField& out) const {
    check_grid(out.n());
    out.set_zero();
    if (modes_.empty()) return;
    std::vector<double> w(modes_.size());
    mode_weights(t, w);
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        const auto& m = modes_[i];
        for (int c = 0; c < 2; ++c) {
            auto coeffs = out.component(c);
            coeffs[out.slot(m.kx, m.ky)] += w[i] * m.amplitude[c];
            if (m.ky == 0) coeffs[out.slot(-m.kx, 0)] += w[i] * std::conj(m.amplitude[c]);
        }
    }
}

SpectralField ForcingField::evaluate(double t, int n) const {
    SpectralField out(n);
    evaluate(t, out);
    return out;
}

nlohmann::json ForcingField::describe() const {
    json modes = json::array();
    for (const auto& m : modes_) {
        modes.push_back(json{{"kx", m.kx},
                             {"ky", m.ky},
                             {"amplitude", json::array({complex_pair(m.amplitude[0]), complex_pair(m.amplitude[1])})},
                             {"component", m.component}});
    }
    const auto& s = temporal_;
    json temporal{{"kind", std::string(funcspace::to_string(s.base_kind()))},
                  {"amplitudes", std::vector<double>(s.amplitudes().begin(), s.amplitudes().end())},
                  {"frequencies", std::vector<double>(s.frequencies().begin(), s.frequencies().end())},
                  {"phase_offsets", std::vector<double>(s.phase_offsets().begin(), s.phase_offsets().end())},
                  {"base_shift", s.base_shift()}};
    return json{{"modes", modes}, {"temporal", temporal}};
}

ForcingField shear_pattern(std::span<const std::array<int, 2>> modes, std::span<const double> weights,
                           funcspace::AnalyticSignal temporal, std::span<const std::size_t> components) {
    if (modes.empty()) throw InvalidArgument("a forcing pattern needs at least one mode");
    if (weights.size() != modes.size()) {
        throw InvalidArgument(fmt::format("{} forcing weights for {} modes", weights.size(), modes.size()));
    }
    if (!components.empty() && components.size() != modes.size()) {
        throw InvalidArgument(fmt::format("{} forcing components for {} modes", components.size(), modes.size()));
    }
    std::vector<ForcingMode> raw;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        raw.push_back(ForcingMode::shear(modes[i][0], modes[i][1], weights[i], components.empty() ? 0 : components[i]));
    }
    const ForcingField unit(raw, funcspace::AnalyticSignal::constant(std::vector<double>(temporal.output_dim(), 1.0)));
    const double norm = unit.norm_at(0.0);
    if (!(norm > 0.0)) throw InvalidArgument("forcing pattern has zero norm");
    for (auto& m : raw) {
        m.amplitude[0] /= norm;
        m.amplitude[1] /= norm;
    }
    return ForcingField(std::move(raw), std::move(temporal));
}

// ---------------------------------------------------------------------------
// Solver

Solver::Solver(SolverConfig cfg, ForcingField forcing)
    : cfg_(cfg),
      forcing_(std::move(forcing)),
      bilinear_(cfg.n, cfg.dealias),
      u_(cfg.n),
      rhs_(cfg.n),
      rhs_prev_(cfg.n),
      scratch_(cfg.n),
      forcing_scratch_(cfg.n) {
    cfg_.validate();
    forcing_.check_grid(cfg_.n);
    decay_.resize(u_.modes());
    for (int ix = 0; ix < u_.n(); ++ix) {
        const double kx = u_.kx(ix);
        for (int iy = 0; iy < u_.half(); ++iy) {
            const double ky = u_.ky(iy);
            decay_[u_.index(ix, iy)] = std::exp(-cfg_.nu * (kx * kx + ky * ky) * cfg_.dt);
        }
    }
}

void Solver::reset(const SpectralField& u0, double t0) {
    if (!u0.same_grid(u_)) {
        throw InvalidArgument(fmt::format("initial state grid {} does not match solver grid {}", u0.n(), u_.n()));
    }
    u_ = u0;
    t0_ = t0;
    steps_ = 0;
    has_history_ = false;
    check_finite();
}

void Solver::explicit_rhs(const SpectralField& u, double t, SpectralField& out) {
    bilinear_.evaluate(u, u, out);
    forcing_.evaluate(t, forcing_scratch_);
    for (int c = 0; c < 2; ++c) {
        auto o = out.component(c);
        const auto f = forcing_scratch_.component(c);
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = f[i] - o[i];
    }
}

void Solver::step() {
    const double t = time();
    const double dt = cfg_.dt;
    explicit_rhs(u_, t, rhs_);

    if (has_history_) {
        for (int c = 0; c < 2; ++c) {
            auto u = u_.component(c);
            const auto nn = rhs_.component(c);
            const auto np = rhs_prev_.component(c);
            for (std::size_t i = 0; i < u.size(); ++i) {
                const double e = decay_[i];
                u[i] = e * (u[i] + dt * (1.5 * nn[i] - 0.5 * e * np[i]));
            }
        }
    } else if (cfg_.startup == Startup::euler) {
        for (int c = 0; c < 2; ++c) {
            auto u = u_.component(c);
            const auto nn = rhs_.component(c);
            for (std::size_t i = 0; i < u.size(); ++i) u[i] = decay_[i] * (u[i] + dt * nn[i]);
        }
    } else {
        // Predictor u* = E (u + dt N(u, t)), corrector E u + dt/2 (E N(u, t) + N(u*, t + dt)).
        for (int c = 0; c < 2; ++c) {
            auto s = scratch_.component(c);
            const auto u = u_.component(c);
            const auto nn = rhs_.component(c);
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = decay_[i] * (u[i] + dt * nn[i]);
        }
        explicit_rhs(scratch_, t + dt, rhs_prev_);
        for (int c = 0; c < 2; ++c) {
            auto u = u_.component(c);
            const auto nn = rhs_.component(c);
            const auto ns = rhs_prev_.component(c);
            for (std::size_t i = 0; i < u.size(); ++i) {
                u[i] = decay_[i] * (u[i] + 0.5 * dt * nn[i]) + 0.5 * dt * ns[i];
            }
        }
    }
    std::swap(rhs_, rhs_prev_);
    has_history_ = true;
    ++steps_;
    check_finite();
}

void Solver::advance(std::size_t steps) {
    for (std::size_t k = 0; k < steps; ++k) step();
}

EnergyRecord Solver::record() const {
    const double t = time();
    return EnergyRecord{t, energy(u_), enstrophy(u_), forcing_.norm_at(t)};
}

void Solver::check_finite() const {
    for (int c = 0; c < 2; ++c) {
        const auto a = u_.component(c);
        for (int ix = 0; ix < u_.n(); ++ix) {
            for (int iy = 0; iy < u_.half(); ++iy) {
                const Complex z = a[u_.index(ix, iy)];
                if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
                    throw SolverError(fmt::format("non-finite coefficient in component {} at mode (kx={}, ky={})", c,
                                                  u_.kx(ix), u_.ky(iy)),
                                      time());
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// solve

double auto_energy_ceiling(const SpectralField& u0, const ForcingField& forcing, const SolverConfig& cfg, double t0) {
    double fmax = 0.0;
    const std::size_t steps = cfg.steps();
    if (!forcing.modes().empty()) {
        std::vector<double> w(forcing.modes().size());
        for (std::size_t k = 0; k <= steps; ++k) {
            forcing.mode_weights(t0 + static_cast<double>(k) * cfg.dt, w);
            fmax = std::max(fmax, forcing.norm_of_weights(w));
        }
    }
    const double scale = energy(u0) + 0.5 * (fmax / cfg.nu) * (fmax / cfg.nu);
    return 1e6 * std::max(scale, 1e-12);
}

Trajectory solve(const SpectralField& u0, const ForcingField& forcing, const SolverConfig& cfg,
                 const SolveOptions& options) {
    cfg.validate();
    const std::size_t steps = cfg.steps();
    if (options.stride == 0 || steps % options.stride != 0) {
        throw InvalidArgument(fmt::format("sample stride {} does not divide the step count {}", options.stride, steps));
    }
    const double ceiling =
        cfg.energy_ceiling > 0.0 ? cfg.energy_ceiling : auto_energy_ceiling(u0, forcing, cfg, options.t0);

    Solver solver(cfg, forcing);
    solver.reset(u0, options.t0);

    Trajectory traj;
    traj.config = cfg;
    traj.forcing = forcing.describe();
    traj.stride = options.stride;
    traj.records.reserve(steps + 1);
    traj.states.reserve(steps / options.stride + 1);
    traj.times.reserve(steps / options.stride + 1);

    traj.records.push_back(solver.record());
    traj.states.push_back(solver.state());
    traj.times.push_back(solver.time());
    for (std::size_t k = 1; k <= steps; ++k) {
        solver.step();
        const auto rec = solver.record();
        if (rec.energy > ceiling) {
            throw SolverError(fmt::format("energy {} exceeded the ceiling {} (blow-up)", rec.energy, ceiling), rec.t);
        }
        traj.records.push_back(rec);
        if (k % options.stride == 0) {
            traj.states.push_back(solver.state());
            traj.times.push_back(rec.t);
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Persistence

std::string energy_csv(const std::vector<EnergyRecord>& records) {
    std::string out = "t,energy,enstrophy,forcing_norm\n";
    for (const auto& r : records) {
        out += fmt::format("{},{},{},{}\n", io::fmt17(r.t), io::fmt17(r.energy), io::fmt17(r.enstrophy),
                           io::fmt17(r.forcing_norm));
    }
    return out;
}

TrajectoryFiles write_trajectory(const std::filesystem::path& dir, const std::string& stem, const Trajectory& traj,
                                 const nlohmann::json& extra) {
    std::filesystem::create_directories(dir);
    TrajectoryFiles files{dir / (stem + ".json"), dir / (stem + ".bin"), dir / (stem + "_energy.csv")};

    std::string buf;
    if (!traj.states.empty()) buf.reserve(traj.states.size() * 2 * traj.states.front().modes() * 16);
    for (const auto& s : traj.states) {
        for (int c = 0; c < 2; ++c) {
            for (const Complex z : s.component(c)) {
                put_le(buf, z.real());
                put_le(buf, z.imag());
            }
        }
    }
    io::write_text(files.binary, buf);
    io::write_text(files.energy_csv, energy_csv(traj.records));

    const int n = traj.config.n;
    json manifest{{"format", kTrajectoryFormat},
                  {"version", 1},
                  {"domain", kDomain},
                  {"config", to_json(traj.config)},
                  {"forcing", traj.forcing},
                  {"grid", {{"n", n}, {"half", n / 2 + 1}, {"components", 2}}},
                  {"layout", kLayout},
                  {"stride", traj.stride},
                  {"samples", traj.states.size()},
                  {"times", traj.times},
                  {"files", {{"binary", file_entry(files.binary)}, {"energy_csv", file_entry(files.energy_csv)}}}};
    for (const auto& [key, value] : extra.items()) manifest[key] = value;
    io::write_text(files.manifest, manifest.dump(2) + "\n");
    return files;
}

Trajectory read_trajectory(const std::filesystem::path& manifest_path) {
    const json manifest = json::parse(io::read_text(manifest_path));
    if (manifest.value("format", std::string{}) != kTrajectoryFormat) {
        throw InvalidArgument(fmt::format("{} is not a trajectory manifest", manifest_path.string()));
    }
    const auto dir = manifest_path.parent_path();
    const auto& files = manifest.at("files");
    for (const auto* key : {"binary", "energy_csv"}) {
        const auto& entry = files.at(key);
        const auto path = dir / entry.at("name").get<std::string>();
        if (io::sha256_file(path) != entry.at("sha256").get<std::string>()) {
            throw InvalidArgument(fmt::format("checksum mismatch for {}", path.string()));
        }
    }

    Trajectory traj;
    traj.config = config_from_json(manifest.at("config"));
    traj.forcing = manifest.at("forcing");
    traj.stride = manifest.at("stride").get<std::size_t>();
    traj.times = manifest.at("times").get<std::vector<double>>();

    const std::string bin = io::read_text(dir / files.at("binary").at("name").get<std::string>());
    const int n = manifest.at("grid").at("n").get<int>();
    SpectralField proto(n);
    const std::size_t per_sample = 2 * proto.modes() * 16;
    const std::size_t samples = manifest.at("samples").get<std::size_t>();
    if (bin.size() != samples * per_sample || traj.times.size() != samples) {
        throw InvalidArgument(fmt::format("trajectory binary holds {} bytes, expected {} samples of {} bytes",
                                          bin.size(), samples, per_sample));
    }
    const char* p = bin.data();
    for (std::size_t s = 0; s < samples; ++s) {
        SpectralField u(n);
        for (int c = 0; c < 2; ++c) {
            for (Complex& z : u.component(c)) {
                z = Complex(get_le(p), get_le(p + 8));
                p += 16;
            }
        }
        traj.states.push_back(std::move(u));
    }

    std::istringstream csv(io::read_text(dir / files.at("energy_csv").at("name").get<std::string>()));
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        EnergyRecord r;
        char* end = nullptr;
        const char* q = line.c_str();
        r.t = std::strtod(q, &end);
        r.energy = std::strtod(end + 1, &end);
        r.enstrophy = std::strtod(end + 1, &end);
        r.forcing_norm = std::strtod(end + 1, &end);
        traj.records.push_back(r);
    }
    return traj;
}

}  // namespace recurflow::nse2d
