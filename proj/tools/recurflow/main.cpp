// recurflow: run experiments, emit plot data, verify run manifests.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "recurflow/config.hpp"
#include "recurflow/errors.hpp"
#include "recurflow/runner.hpp"

namespace fs = std::filesystem;
namespace cli = recurflow::cli;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

std::mutex output_mutex;

template <class... Args>
void say(std::FILE* stream, fmt::format_string<Args...> f, Args&&... args) {
    std::lock_guard lock(output_mutex);
    fmt::print(stream, f, std::forward<Args>(args)...);
    std::fflush(stream);
}

struct Job {
    fs::path config_path;
    cli::ExperimentConfig config;
    fs::path output_dir;
};

int command_run(const std::vector<std::string>& configs, const std::string& output_dir, bool dry_run, int jobs) {
    std::vector<Job> queue;
    bool config_errors = false;
    for (const auto& path : configs) {
        try {
            queue.push_back({path, cli::parse_config(path), {}});
        } catch (const recurflow::ConfigError& e) {
            config_errors = true;
            say(stderr, "{}: invalid config\n", path);
            for (const auto& p : e.problems()) say(stderr, "  - {}\n", p);
        }
    }
    if (config_errors) return kExitConfig;

    std::set<fs::path> dirs;
    for (auto& job : queue) {
        fs::path override_dir = output_dir;
        if (!override_dir.empty() && queue.size() > 1) override_dir /= job.config_path.stem();
        job.output_dir = cli::resolve_output_dir(job.config, override_dir);
        const auto key = fs::weakly_canonical(fs::absolute(job.output_dir));
        if (!dirs.insert(key).second) {
            say(stderr, "output directory {} is used by more than one config\n", job.output_dir.string());
            return kExitConfig;
        }
        for (const auto& w : job.config.warnings) say(stderr, "{}: warning: {}\n", job.config_path.string(), w);
    }

    if (dry_run) {
        for (const auto& job : queue) say(stdout, "{}\n", cli::plan(job.config, job.output_dir).dump(2));
        return 0;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < queue.size(); i = next++) {
            const auto& job = queue[i];
            try {
                const auto manifest = cli::run(job.config, job.output_dir);
                say(stdout, "{}: {} -> {}\n", job.config_path.string(), manifest.content.at("outcome").dump(),
                    manifest.path.string());
            } catch (const std::exception& e) {
                ++failures;
                say(stderr, "{}: {}\n", job.config_path.string(), e.what());
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, jobs));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(threads, queue.size()); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return failures == 0 ? 0 : kExitFailure;
}

int command_plot(const std::string& manifest) {
    for (const auto& path : cli::emit_plot_data(manifest)) say(stdout, "{}\n", path.string());
    return 0;
}

int command_verify(const std::string& manifest) {
    const auto check = cli::verify_manifest(manifest);
    for (const auto& p : check.problems) say(stderr, "{}\n", p);
    say(stdout, "{}: {} files, {}\n", manifest, check.files, check.ok() ? "ok" : "FAILED");
    return check.ok() ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonautonomous 2D Navier-Stokes recurrence experiments"};
    app.set_version_flag("--version", std::string(cli::library_version()));
    app.require_subcommand(1);

    std::vector<std::string> configs;
    std::string output_dir;
    bool dry_run = false;
    int jobs = 1;
    auto* run = app.add_subcommand("run", "Run one or more experiment configs");
    run->add_option("config", configs, "Config files")->required()->check(CLI::ExistingFile);
    run->add_option("--output-dir", output_dir, "Output directory (one subdirectory per config when several)");
    run->add_flag("--dry-run", dry_run, "Validate and print the resolved plan without running");
    run->add_option("--jobs,-j", jobs, "Configs to run in parallel")->check(CLI::PositiveNumber);

    std::string manifest;
    auto* plot = app.add_subcommand("plot", "Write plot-ready CSVs for a completed run");
    plot->add_option("manifest", manifest, "Run manifest.json")->required();
    auto* verify = app.add_subcommand("verify", "Recompute the checksums of a run");
    verify->add_option("manifest", manifest, "Run manifest.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return command_run(configs, output_dir, dry_run, jobs);
        if (*plot) return command_plot(manifest);
        if (*verify) return command_verify(manifest);
    } catch (const recurflow::ConfigError& e) {
        for (const auto& p : e.problems()) say(stderr, "{}\n", p);
        return kExitConfig;
    } catch (const std::exception& e) {
        say(stderr, "error: {}\n", e.what());
        return kExitFailure;
    }
    return kExitFailure;
}
