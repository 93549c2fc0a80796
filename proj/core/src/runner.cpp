#include "recurflow/runner.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <numeric>
#include <set>

#include <fftw3.h>
#include <fmt/format.h>
#include <openssl/crypto.h>

#include "recurflow/errors.hpp"
#include "recurflow/experiments.hpp"
#include "recurflow/io.hpp"
#include "recurflow/skewprod.hpp"

#ifndef RECURFLOW_VERSION
#define RECURFLOW_VERSION "0.0.0"
#endif

namespace recurflow::cli {

namespace fs = std::filesystem;

namespace {

using json = nlohmann::json;
constexpr std::string_view kRunFormat = "recurflow-run";
constexpr int kRunFormatVersion = 1;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string opt17(const std::optional<double>& v) { return v ? io::fmt17(*v) : std::string(); }

/// Writes files under the run directory and remembers them for the manifest.
class Artifacts {
public:
    explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

    const fs::path& dir() const { return dir_; }

    void text(const std::string& name, std::string_view contents) {
        io::write_text(dir_ / name, contents);
        add(name);
    }

    void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

    void trajectory(const std::string& stem, const nse2d::Trajectory& traj) {
        const auto files = nse2d::write_trajectory(dir_, stem, traj);
        add(files.manifest.filename().string());
        add(files.binary.filename().string());
        add(files.energy_csv.filename().string());
    }

    json entries() const {
        json out = json::array();
        for (const auto& name : names_) {
            const auto path = dir_ / name;
            out.push_back(json{{"path", name}, {"sha256", io::sha256_file(path)}, {"bytes", fs::file_size(path)}});
        }
        return out;
    }

private:
    void add(const std::string& name) {
        if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
    }

    fs::path dir_;
    std::vector<std::string> names_;
};

json shift_entry(std::string_view label, const recurrence::ShiftSet& s) {
    return json{{"label", label}, {"epsilon", s.epsilon}, {"tau", s.shifts}, {"windowed_sup", s.windowed_sup}};
}

json returns_entry(std::string_view label, double epsilon, const std::vector<double>& taus,
                   const std::vector<double>& sups) {
    return json{{"label", label}, {"epsilon", epsilon}, {"tau", taus}, {"windowed_sup", sups}};
}

json empty_plot_data() {
    return json{{"energy", nullptr},
                {"shift_sets", json::array()},
                {"inclusion", json::array()},
                {"returns", json::array()}};
}

std::string boundedness_csv(const std::vector<recurrence::BoundednessPoint>& scan) {
    std::string out = "horizon,sup\n";
    for (const auto& b : scan) out += fmt::format("{},{}\n", io::fmt17(b.horizon), io::fmt17(b.sup));
    return out;
}

// ---------------------------------------------------------------------------
// Experiments

json run_classify(const ExperimentConfig& c, Artifacts& out) {
    auto params = c.classify.params;
    std::vector<funcspace::AnalyticSignal> translates;
    for (double off : c.classify.probe_offsets) translates.push_back(c.signal->translate(off));
    params.hull_samples.assign(translates.begin(), translates.end());
    const auto report = recurrence::classify(*c.signal, c.classify.epsilon_ladder, params);

    auto plot = empty_plot_data();
    std::string inclusion = "epsilon,inclusion_length,shift_count,return_count\n";
    for (const auto& e : report.per_epsilon) {
        plot["shift_sets"].push_back(shift_entry("signal", e.shifts));
        plot["inclusion"].push_back(
            json{{"label", "signal"}, {"epsilon", e.epsilon}, {"length", optional_json(e.inclusion_length)}});
        std::vector<double> taus;
        std::vector<double> sups;
        for (const auto& r : e.returns) {
            taus.push_back(r.tau);
            sups.push_back(r.windowed_sup);
        }
        plot["returns"].push_back(returns_entry("signal", e.epsilon, taus, sups));
        inclusion += fmt::format("{},{},{},{}\n", io::fmt17(e.epsilon), opt17(e.inclusion_length), e.shifts.shifts.size(),
                                 e.returns.size());
    }
    out.text("inclusion.csv", inclusion);
    out.text("boundedness.csv", boundedness_csv(report.boundedness));
    out.text("report.txt", recurrence::text_summary(report));
    json r{{"experiment", "classify_signal"},
           {"classification", std::string(recurrence::to_string(report.classification))},
           {"report", recurrence::to_json(report)},
           {"plot_data", plot}};
    out.json_file("report.json", r);
    return json{{"classification", r["classification"]}};
}

json run_verify(const ExperimentConfig& c, Artifacts& out) {
    const auto result = experiments::solver_verify(c.verify);
    out.trajectory("kolmogorov", result.kolmogorov);
    if (!result.gronwall_records.empty()) {
        out.text("energy_inequality_energy.csv", nse2d::energy_csv(result.gronwall_records));
    }
    out.text("verify.csv", experiments::verify_csv(result.rows));
    out.text("report.txt", experiments::text_summary(result));
    auto plot = empty_plot_data();
    plot["energy"] = "kolmogorov_energy.csv";
    json r = experiments::to_json(result);
    r["experiment"] = "solver_verify";
    r["plot_data"] = plot;
    out.json_file("report.json", r);
    return json{{"passed", result.passed()}};
}

json search_plot_and_tables(const skewprod::SearchResult& s, Artifacts& out) {
    auto plot = empty_plot_data();
    std::string inclusion =
        "epsilon,base_inclusion_length,joint_inclusion_length,base_shift_count,joint_shift_count,base_returns,"
        "fiber_near_returns\n";
    std::string returns = "epsilon,tau,base_sup,fiber_sup\n";
    for (const auto& e : s.evidence) {
        plot["shift_sets"].push_back(shift_entry("base", e.base));
        plot["shift_sets"].push_back(shift_entry("joint", e.joint));
        plot["inclusion"].push_back(
            json{{"label", "base"}, {"epsilon", e.epsilon}, {"length", optional_json(e.base_inclusion_length)}});
        plot["inclusion"].push_back(
            json{{"label", "joint"}, {"epsilon", e.epsilon}, {"length", optional_json(e.joint_inclusion_length)}});
        std::vector<double> taus;
        std::vector<double> sups;
        for (const auto& b : e.base_returns) {
            taus.push_back(b.tau);
            sups.push_back(b.base_sup);
            returns += fmt::format("{},{},{},{}\n", io::fmt17(e.epsilon), io::fmt17(b.tau), io::fmt17(b.base_sup),
                                   opt17(b.fiber_sup));
        }
        plot["returns"].push_back(returns_entry("base", e.epsilon, taus, sups));
        inclusion += fmt::format("{},{},{},{},{},{},{}\n", io::fmt17(e.epsilon), opt17(e.base_inclusion_length),
                                 opt17(e.joint_inclusion_length), e.base.shifts.size(), e.joint.shifts.size(),
                                 e.base_returns.size(), e.fiber_near_returns);
    }
    out.text("inclusion.csv", inclusion);
    out.text("returns.csv", returns);
    out.text("series_energy.csv", nse2d::energy_csv(s.series));
    plot["energy"] = "series_energy.csv";
    if (!s.segment.states.empty()) out.trajectory("segment", s.segment);
    return plot;
}

json run_recurrent(const ExperimentConfig& c, Artifacts& out) {
    const auto u0 = make_initial(c.initial, c.solver.n, c.seed);
    const skewprod::HullElement omega0(c.forcing());
    const auto result = skewprod::recurrent_solution_search(u0, omega0, c.search.search);
    const auto plot = search_plot_and_tables(result, out);
    out.text("report.txt", skewprod::text_summary(result));
    json r = skewprod::to_json(result);
    r["experiment"] = "recurrent_search";
    r["plot_data"] = plot;
    out.json_file("report.json", r);
    return json{{"classification", r["classification"]}, {"inconclusive", result.inconclusive}};
}

json run_poisson(const ExperimentConfig& c, Artifacts& out) {
    const auto u0 = make_initial(c.initial, c.solver.n, c.seed);
    const skewprod::HullElement omega0(c.forcing());
    const auto result = skewprod::poisson_stable_solution_search(u0, omega0, c.search);
    auto plot = search_plot_and_tables(result.search, out);
    std::string gen = "tau,windowed_sup\n";
    std::vector<double> taus;
    std::vector<double> sups;
    for (const auto& g : result.generator_returns) {
        gen += fmt::format("{},{}\n", io::fmt17(g.tau), io::fmt17(g.windowed_sup));
        taus.push_back(g.tau);
        sups.push_back(g.windowed_sup);
    }
    plot["returns"].push_back(returns_entry("generator", c.search.generator_epsilon, taus, sups));
    out.text("generator_returns.csv", gen);
    out.text("report.txt", skewprod::text_summary(result));
    json r = skewprod::to_json(result);
    r["experiment"] = "poisson_search";
    r["plot_data"] = plot;
    out.json_file("report.json", r);
    return json{{"classification", r["classification"]},
                {"weakly_regular", result.weakly_regular},
                {"near_returns_found", result.near_returns_found},
                {"hypothesis_violated", result.hypothesis_violated}};
}

json run_cocycle(const ExperimentConfig& c, Artifacts& out) {
    const auto u0 = make_initial(c.initial, c.solver.n, c.seed);
    const skewprod::HullElement omega0(c.forcing());
    const auto report = skewprod::cocycle_check(u0, omega0, c.solver, c.cocycle.t, c.cocycle.tau, c.cocycle.tolerance);

    auto cfg = c.solver;
    cfg.t_end = c.cocycle.t + c.cocycle.tau;
    const auto steps = cfg.steps();
    const std::size_t stride = steps == 0 ? 1 : std::gcd(c.cocycle.trajectory_stride, steps);
    out.trajectory("direct", nse2d::solve(u0, omega0.forcing(), cfg, {stride, 0.0}));

    const json j = skewprod::to_json(report);
    std::string txt = fmt::format("cocycle check: {}\n", report.passed ? "pass" : "FAIL");
    txt += fmt::format("t = {}, tau = {}\n", io::fmt17(report.t), io::fmt17(report.tau));
    txt += fmt::format("fiber discrepancy: {} (relative {}, tolerance {})\n", io::fmt17(report.fiber_discrepancy),
                       io::fmt17(report.fiber_relative), io::fmt17(report.tolerance));
    txt += fmt::format("base discrepancy: {}\n", io::fmt17(report.base_discrepancy));
    out.text("report.txt", txt);
    auto plot = empty_plot_data();
    plot["energy"] = "direct_energy.csv";
    json r{{"experiment", "cocycle_check"}, {"cocycle", j}, {"hull", omega0.to_json()}, {"plot_data", plot}};
    out.json_file("report.json", r);
    return json{{"passed", report.passed}};
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json versions() {
    json v{{"recurflow", std::string(library_version())},
           {"fftw", std::string(fftw_version)},
           {"openssl", std::string(OpenSSL_version(OPENSSL_VERSION))},
           {"fmt", fmt::format("{}.{}.{}", FMT_VERSION / 10000, FMT_VERSION / 100 % 100, FMT_VERSION % 100)},
           {"compiler", fmt::format("{} {}", RECURFLOW_COMPILER_ID, __VERSION__)}};
#ifdef NLOHMANN_JSON_VERSION_MAJOR
    v["nlohmann_json"] = fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                     NLOHMANN_JSON_VERSION_PATCH);
#endif
    return v;
}

json read_json(const fs::path& path) {
    try {
        return json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw Error(fmt::format("{}: not valid JSON ({})", path.string(), e.what()));
    }
}

/// Loads a manifest and checks that its run completed.
json load_complete_manifest(const fs::path& manifest) {
    if (!fs::is_regular_file(manifest)) {
        throw Error(fmt::format("{}: no manifest; the run did not complete", manifest.string()));
    }
    const json m = read_json(manifest);
    if (m.value("format", "") != kRunFormat) throw Error(fmt::format("{}: not a run manifest", manifest.string()));
    if (m.value("status", "") != "complete" || fs::exists(manifest.parent_path() / kPartialName)) {
        throw Error(fmt::format("{}: run is incomplete", manifest.string()));
    }
    return m;
}

std::string epsilon_tag(double eps) { return fmt::format("{}", eps); }

}  // namespace

std::string_view library_version() { return RECURFLOW_VERSION; }

fs::path resolve_output_dir(const ExperimentConfig& config, const fs::path& override_dir) {
    if (!override_dir.empty()) return override_dir;
    if (!config.output_dir.empty()) return config.output_dir;
    const auto stem = config.source.empty() ? std::string(to_string(config.experiment)) : config.source.stem().string();
    return fs::path("runs") / stem;
}

nlohmann::json plan(const ExperimentConfig& config, const fs::path& output_dir) {
    json p{{"experiment", std::string(to_string(config.experiment))},
           {"output_dir", output_dir.generic_string()},
           {"config", config.echo()},
           {"warnings", config.warnings}};
    std::size_t steps = 0;
    switch (config.experiment) {
    case Experiment::classify_signal: break;
    case Experiment::solver_verify: steps = config.verify.solver.steps(); break;
    case Experiment::recurrent_search:
    case Experiment::poisson_search: steps = config.search.search.solver.steps(); break;
    case Experiment::cocycle_check: steps = config.solver.steps(); break;
    }
    if (steps > 0) p["solver_steps"] = steps;
    return p;
}

RunManifest run(const ExperimentConfig& config, const fs::path& output_dir) {
    const auto started = std::chrono::steady_clock::now();
    const auto started_utc = utc_now();
    fs::create_directories(output_dir);
    const auto manifest_path = output_dir / kManifestName;
    const auto partial = output_dir / kPartialName;
    fs::remove(manifest_path);
    fs::remove_all(output_dir / "plot");
    io::write_text(partial, fmt::format("experiment = {}\nstarted = {}\n", to_string(config.experiment), started_utc));

    Artifacts out(output_dir);
    json outcome;
    try {
        switch (config.experiment) {
        case Experiment::classify_signal: outcome = run_classify(config, out); break;
        case Experiment::solver_verify: outcome = run_verify(config, out); break;
        case Experiment::recurrent_search: outcome = run_recurrent(config, out); break;
        case Experiment::poisson_search: outcome = run_poisson(config, out); break;
        case Experiment::cocycle_check: outcome = run_cocycle(config, out); break;
        }
    } catch (const std::exception& e) {
        io::write_text(partial, io::read_text(partial) + fmt::format("error = {}\n", e.what()));
        throw Error(fmt::format("{} run in {} failed: {}", to_string(config.experiment), output_dir.string(),
                                e.what()));
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest{{"format", kRunFormat},
                  {"version", kRunFormatVersion},
                  {"status", "complete"},
                  {"experiment", std::string(to_string(config.experiment))},
                  {"outcome", outcome},
                  {"config", config.echo()},
                  {"warnings", config.warnings},
                  {"artifacts", out.entries()},
                  {"started_utc", started_utc},
                  {"wall_clock_seconds", wall},
                  {"versions", versions()}};
    io::write_text(manifest_path, manifest.dump(2) + "\n");
    fs::remove(partial);
    return {manifest_path, std::move(manifest)};
}

std::vector<fs::path> emit_plot_data(const fs::path& manifest) {
    const json m = load_complete_manifest(manifest);
    const auto dir = manifest.parent_path();
    const json report = read_json(dir / "report.json");
    const json& plot = report.at("plot_data");
    const auto plot_dir = dir / "plot";
    fs::create_directories(plot_dir);
    std::vector<fs::path> written;
    auto emit = [&](const std::string& name, const std::string& text) {
        io::write_text(plot_dir / name, text);
        written.push_back(plot_dir / name);
    };

    if (!plot.at("energy").is_null()) emit("energy.csv", io::read_text(dir / plot.at("energy").get<std::string>()));

    for (const auto& s : plot.at("shift_sets")) {
        const auto taus = s.at("tau").get<std::vector<double>>();
        const auto sups = s.at("windowed_sup").get<std::vector<double>>();
        std::vector<std::size_t> order(taus.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return taus[a] < taus[b]; });
        std::string csv = "tau,windowed_sup\n";
        for (auto i : order) csv += fmt::format("{},{}\n", io::fmt17(taus[i]), io::fmt17(sups[i]));
        emit(fmt::format("shifts_{}_eps_{}.csv", s.at("label").get<std::string>(),
                         epsilon_tag(s.at("epsilon").get<double>())),
             csv);
    }

    std::string inclusion = "label,epsilon,inclusion_length\n";
    for (const auto& e : plot.at("inclusion")) {
        const auto& len = e.at("length");
        inclusion += fmt::format("{},{},{}\n", e.at("label").get<std::string>(), io::fmt17(e.at("epsilon").get<double>()),
                                 len.is_null() ? std::string() : io::fmt17(len.get<double>()));
    }
    emit("inclusion_vs_epsilon.csv", inclusion);

    std::string returns = "label,epsilon,tau,windowed_sup\n";
    for (const auto& r : plot.at("returns")) {
        const auto taus = r.at("tau").get<std::vector<double>>();
        const auto sups = r.at("windowed_sup").get<std::vector<double>>();
        for (std::size_t i = 0; i < taus.size(); ++i) {
            returns += fmt::format("{},{},{},{}\n", r.at("label").get<std::string>(),
                                   io::fmt17(r.at("epsilon").get<double>()), io::fmt17(taus[i]), io::fmt17(sups[i]));
        }
    }
    emit("return_ladder.csv", returns);
    (void)m;
    return written;
}

ManifestCheck verify_manifest(const fs::path& manifest) {
    ManifestCheck check;
    const json m = load_complete_manifest(manifest);
    const auto dir = manifest.parent_path();
    std::set<std::string> listed;
    for (const auto& a : m.at("artifacts")) {
        const auto name = a.at("path").get<std::string>();
        listed.insert(name);
        ++check.files;
        const auto path = dir / name;
        if (!fs::is_regular_file(path)) {
            check.problems.push_back(fmt::format("{}: missing", name));
            continue;
        }
        const auto bytes = fs::file_size(path);
        if (bytes != a.at("bytes").get<std::uintmax_t>()) {
            check.problems.push_back(
                fmt::format("{}: size {} differs from the recorded {}", name, bytes, a.at("bytes").get<std::uintmax_t>()));
        }
        if (io::sha256_file(path) != a.at("sha256").get<std::string>()) {
            check.problems.push_back(fmt::format("{}: checksum mismatch", name));
        }
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name == kManifestName || name == "plot" || listed.count(name)) continue;
        check.problems.push_back(fmt::format("{}: present but not listed in the manifest", name));
    }
    return check;
}

}  // namespace recurflow::cli
