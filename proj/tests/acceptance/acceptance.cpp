// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "recurflow/config.hpp"
#include "recurflow/experiments.hpp"
#include "recurflow/funcspace.hpp"
#include "recurflow/io.hpp"
#include "recurflow/nse2d.hpp"
#include "recurflow/recurrence.hpp"
#include "recurflow/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace recurflow;
using funcspace::AnalyticSignal;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> body;
};

fs::path g_runs;

fs::path config_path(const std::string& name) { return fs::path(RECURFLOW_SOURCE_DIR) / "configs" / name; }

/// Runs a shipped config into <runs>/<dir> and returns the run directory.
fs::path run_config(const std::string& config, const std::string& dir) {
    const auto out = g_runs / dir;
    fs::remove_all(out);
    cli::run(cli::parse_config(config_path(config)), out);
    return out;
}

json read_json(const fs::path& path) { return json::parse(io::read_text(path)); }

/// check -> value from verify.csv.
std::map<std::string, double> verify_values(const fs::path& dir) {
    std::map<std::string, double> out;
    std::istringstream in(io::read_text(dir / "verify.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        const auto next = line.find(',', comma + 1);
        out[line.substr(0, comma)] = std::stod(line.substr(comma + 1, next - comma - 1));
    }
    return out;
}

AnalyticSignal random_signal(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> amp(-2.0, 2.0);
    std::uniform_real_distribution<double> freq(0.2, 3.0);
    std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
    switch (rng() % 4) {
    case 0: return AnalyticSignal::constant({amp(rng)});
    case 1: return AnalyticSignal::periodic({amp(rng)}, freq(rng), phase(rng));
    case 2: return AnalyticSignal::quasi_periodic({amp(rng), amp(rng)}, {freq(rng), freq(rng)}, {phase(rng), 0.0});
    default: return AnalyticSignal::poisson_example({amp(rng)}).translate(10.0 * freq(rng));
    }
}

Outcome metric_analytics() {
    const auto d = funcspace::compact_open_distance(AnalyticSignal::constant({0.0}), AnalyticSignal::constant({1.0}),
                                                    {20, 64, 0.0});
    const double exact = 0.5 * (1.0 - std::ldexp(1.0, -20));
    const double err01 = std::abs(d.value - exact);

    std::mt19937_64 rng(20240601);
    const funcspace::CompactOpenMetricParams params{20, 64, 0.0};
    double worst_identity = 0.0;
    double worst_symmetry = 0.0;
    double worst_triangle = -1e300;
    for (int i = 0; i < 100; ++i) {
        const auto f = random_signal(rng);
        const auto g = random_signal(rng);
        const auto h = random_signal(rng);
        const double fg = funcspace::compact_open_distance(f, g, params).value;
        const double gf = funcspace::compact_open_distance(g, f, params).value;
        const double gh = funcspace::compact_open_distance(g, h, params).value;
        const double fh = funcspace::compact_open_distance(f, h, params).value;
        worst_identity = std::max(worst_identity, funcspace::compact_open_distance(f, f, params).value);
        worst_symmetry = std::max(worst_symmetry, std::abs(fg - gf));
        worst_triangle = std::max(worst_triangle, fh - fg - gh);
        if (fg < 0.0) worst_identity = std::max(worst_identity, -fg);
    }
    const bool ok = err01 <= 1e-15 && worst_identity <= 1e-12 && worst_symmetry <= 1e-12 && worst_triangle <= 1e-12;
    return {ok, fmt::format("|d(0,1) - exact| = {:.3g}; d(f,f) <= {:.3g}; asymmetry <= {:.3g}; triangle excess {:.3g}",
                            err01, worst_identity, worst_symmetry, worst_triangle)};
}

Outcome kolmogorov_decay() {
    const auto dir = run_config("verify_kolmogorov.toml", "verify_kolmogorov");
    const auto v = verify_values(dir);
    const double decay = v.at("kolmogorov_decay_relative_error");
    double min_ratio = 1e300;
    int ratios = 0;
    for (const auto& [check, value] : v) {
        if (check.rfind("forced_kolmogorov_order_ratio_dt=", 0) == 0) {
            min_ratio = std::min(min_ratio, value);
            ++ratios;
        }
    }
    const bool ok = decay <= 1e-6 && ratios >= 1 && min_ratio >= 1.9;
    return {ok, fmt::format("relative error at t = 1: {:.3g}; min error ratio over {} halvings: {:.4f}", decay, ratios,
                            min_ratio)};
}

Outcome operator_identities() {
    using namespace nse2d;
    const int n = 32;
    double leray = 0.0;
    double trilinear = 0.0;
    double stokes = 0.0;
    BilinearEvaluator b(n);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        SpectralField raw(n);
        for (int c = 0; c < 2; ++c) {
            for (int ix = 0; ix < n; ++ix) {
                for (int iy = 0; iy < raw.half(); ++iy) raw.at(c, ix, iy) = Complex(g(rng), g(rng));
            }
        }
        raw.enforce_hermitian();
        const auto p = leray_project(raw);
        const auto pp = leray_project(p);
        for (int c = 0; c < 2; ++c) {
            const auto x = p.component(c);
            const auto y = pp.component(c);
            for (std::size_t i = 0; i < x.size(); ++i) leray = std::max(leray, std::abs(x[i] - y[i]));
        }

        const auto u = random_field(n, seed, 10);
        const auto buu = b(u, u);
        trilinear = std::max(trilinear, std::abs(inner(buu, u)) / (h_norm(buu) * h_norm(u)));
        const double nu = 0.37;
        stokes = std::max(stokes, std::abs(inner(stokes_apply(u, nu), u) / (2.0 * nu * enstrophy(u)) - 1.0));
    }
    const bool ok = leray <= 1e-14 && trilinear <= 1e-10 && stokes <= 1e-12;
    return {ok, fmt::format("|PPu - Pu| <= {:.3g}; |<B(u,u),u>| / scale <= {:.3g}; |<Au,u> / (2 nu enstrophy) - 1| <= {:.3g}",
                            leray, trilinear, stokes)};
}

Outcome bounded_energy() {
    using namespace nse2d;
    const std::array<std::array<int, 2>, 1> modes = {{{0, 1}}};
    const std::array<double, 1> w = {1.0};
    const auto forcing =
        shear_pattern(modes, w, AnalyticSignal::quasi_periodic({0.5, 0.5}, {1.0, std::sqrt(2.0)}));
    const SolverConfig cfg{1.0, 32, 1e-2, true, 200.0, Startup::heun, 0.0};
    const double e0 = 0.25;
    const auto u0 = experiments::random_field_with_energy(32, 1, 4, e0);
    const auto traj = solve(u0, forcing, cfg, {cfg.steps(), 0.0});
    double margin = -1e300;
    double at = 0.0;
    double sup_f = 0.0;
    for (const auto& r : traj.records) {
        const double excess = r.energy - (std::exp(-2.0 * r.t) * e0 + 0.5 * 1.05);
        if (excess > margin) {
            margin = excess;
            at = r.t;
        }
        sup_f = std::max(sup_f, r.forcing_norm);
    }
    const bool ok = traj.records.back().t >= 200.0 - 1e-9 && margin <= 0.0 && sup_f <= 1.0 + 1e-12;
    return {ok, fmt::format("max energy - bound over [0, 200] = {:.4f} at t = {:.2f}; sup |F| = {:.6f}", margin, at,
                            sup_f)};
}

Outcome cocycle_law() {
    const auto dir = run_config("cocycle_check.toml", "cocycle_check");
    const auto r = read_json(dir / "report.json").at("cocycle");
    const double rel = r.at("fiber_relative").get<double>();
    const double base = r.at("base_discrepancy").get<double>();
    const bool ok = rel <= 1e-8 && base <= 1e-12;
    return {ok, fmt::format("fiber relative discrepancy {:.3g}; base discrepancy {:.3g}", rel, base)};
}

Outcome classifier_golden() {
    const std::vector<double> ladder = {0.5, 0.2, 0.1, 0.05};
    recurrence::ClassifyParams sine_params;
    sine_params.tau_max = 50.0;
    sine_params.tau_step = 0.01;
    const auto sine = recurrence::classify(AnalyticSignal::periodic({1.0}, 1.0), ladder, sine_params);
    bool sine_ok = sine.classification == recurrence::Classification::recurrent_candidate;
    double worst_l = 0.0;
    for (const auto& e : sine.per_epsilon) {
        if (!e.inclusion_length) {
            sine_ok = false;
            continue;
        }
        worst_l = std::max(worst_l, *e.inclusion_length);
    }
    sine_ok = sine_ok && worst_l <= 2.0 * std::numbers::pi + sine_params.tau_step;

    recurrence::ClassifyParams p;
    p.window_T = 5.0;
    p.tau_step = 1.0 / 1024.0;
    p.horizons = {1e3, 1e5};
    const std::vector<double> eps = {0.1};
    const auto poisson = recurrence::classify(AnalyticSignal::poisson_example(), eps, p);
    double nearest = 1e300;
    for (const auto& r : poisson.per_epsilon.front().returns) nearest = std::min(nearest, std::abs(r.tau - 44.0));
    const double growth = poisson.boundedness.back().sup / poisson.boundedness.front().sup;
    const bool poisson_ok = poisson.classification == recurrence::Classification::poisson_stable_positive_candidate &&
                            nearest <= p.tau_step && growth >= 1.5;
    return {sine_ok && poisson_ok,
            fmt::format("sine: {}, max l(eps) = {:.4f}; poisson_example: {}, |tau - 44| = {:.3g}, sup ratio = {:.1f}",
                        recurrence::to_string(sine.classification), worst_l,
                        recurrence::to_string(poisson.classification), nearest, growth)};
}

Outcome recurrent_search() {
    const auto dir = run_config("recurrent_quasi_periodic.toml", "recurrent_quasi_periodic");
    const auto r = read_json(dir / "report.json");
    bool ok = r.at("classification") == "recurrent_candidate" && r.at("joint_subset_of_base").get<bool>();
    std::string lengths;
    for (const auto& e : r.at("joint_evidence")) {
        if (e.at("epsilon").get<double>() < 1e-2) continue;
        const auto& l = e.at("joint_inclusion_length");
        if (l.is_null()) ok = false;
        lengths += fmt::format("{}{}", lengths.empty() ? "" : ", ", l.is_null() ? "none" : fmt::format("{:.2f}", l.get<double>()));
    }
    // Recheck the subset relation from the raw shift sets.
    std::map<double, std::set<double>> base;
    for (const auto& s : r.at("plot_data").at("shift_sets")) {
        if (s.at("label") != "base") continue;
        const auto taus = s.at("tau").get<std::vector<double>>();
        base[s.at("epsilon").get<double>()] = {taus.begin(), taus.end()};
    }
    std::size_t stray = 0;
    for (const auto& s : r.at("plot_data").at("shift_sets")) {
        if (s.at("label") != "joint") continue;
        const auto& b = base[s.at("epsilon").get<double>()];
        for (double t : s.at("tau").get<std::vector<double>>()) stray += b.count(t) == 0;
    }
    ok = ok && stray == 0;
    return {ok, fmt::format("{}; joint l(eps) = [{}]; joint shifts outside base: {}",
                            r.at("classification").get<std::string>(), lengths, stray)};
}

Outcome poisson_search() {
    const auto dir = run_config("poisson_search.toml", "poisson_search");
    const auto r = read_json(dir / "report.json");
    const bool weak = r.at("hypothesis").at("weakly_regular").get<bool>();
    const auto& check = r.at("check");
    const bool near = check.at("near_returns_found").get<bool>();
    return {weak && near, fmt::format("weakly regular: {}; enstrophy sup {:.1f}; fiber near-returns {}/{} at eps = 0.05",
                                      weak, r.at("enstrophy_sup").get<double>(),
                                      check.at("fiber_near_returns").get<std::size_t>(),
                                      check.at("base_returns").get<std::size_t>())};
}

Outcome determinism() {
    const std::vector<std::pair<std::string, std::string>> runs = {{"verify_kolmogorov.toml", "verify_kolmogorov"},
                                                                   {"cocycle_check.toml", "cocycle_check"},
                                                                   {"recurrent_quasi_periodic.toml", "recurrent_quasi_periodic"}};
    std::size_t files = 0;
    std::vector<std::string> differing;
    for (const auto& [config, dir] : runs) {
        const auto first = g_runs / dir;
        if (!fs::is_regular_file(first / cli::kManifestName)) run_config(config, dir);
        const auto second = run_config(config, dir + "_rerun");
        const auto a = read_json(first / cli::kManifestName).at("artifacts");
        const auto b = read_json(second / cli::kManifestName).at("artifacts");
        if (a.size() != b.size()) differing.push_back(dir + " (artifact lists differ)");
        for (const auto& entry : a) {
            const auto name = entry.at("path").get<std::string>();
            ++files;
            if (!fs::is_regular_file(second / name) || io::read_text(first / name) != io::read_text(second / name)) {
                differing.push_back(dir + "/" + name);
            }
        }
    }
    std::string list;
    for (const auto& d : differing) list += " " + d;
    return {differing.empty(), fmt::format("{} artifacts compared, {} differ{}", files, differing.size(), list)};
}

}  // namespace

int main(int argc, char** argv) {
    g_runs = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_runs");
    fs::create_directories(g_runs);

    const std::vector<Criterion> criteria = {
        {1, "metric analytics", 5.0, metric_analytics},
        {2, "Kolmogorov decay", 30.0, kolmogorov_decay},
        {3, "projection and operator identities", 10.0, operator_identities},
        {4, "bounded energy under bounded forcing", 120.0, bounded_energy},
        {5, "cocycle law", 60.0, cocycle_law},
        {6, "classifier golden cases", 120.0, classifier_golden},
        {7, "recurrent solution under quasi-periodic forcing", 600.0, recurrent_search},
        {8, "Poisson stable solution evidence", 900.0, poisson_search},
        {9, "determinism", 0.0, determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, fmt::format("error: {}", e.what())};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string budget;
        if (c.budget_seconds > 0.0) {
            budget = fmt::format(", budget {:.0f} s", c.budget_seconds);
            if (seconds > c.budget_seconds) {
                o.passed = false;
                o.detail += "; over the time budget";
            }
        }
        if (!o.passed) ++failures;
        fmt::print("{} criterion {}: {} ({:.2f} s{}) {}\n", o.passed ? "PASS" : "FAIL", c.id, c.name, seconds, budget,
                   o.detail);
        std::fflush(stdout);
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
