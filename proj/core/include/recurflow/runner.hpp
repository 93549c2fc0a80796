#pragma once

// Experiment runner: dispatch, artifact persistence and run manifests.
//
// A run directory holds the artifacts and, once everything is written,
// manifest.json. While a run is in progress (or after it failed) the
// directory carries a `.partial` marker instead.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "recurflow/config.hpp"

namespace recurflow::cli {

inline constexpr std::string_view kManifestName = "manifest.json";
inline constexpr std::string_view kPartialName = ".partial";

std::string_view library_version();

/// The override when non-empty, else the config's output_dir, else runs/<config stem>.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const std::filesystem::path& override_dir);

/// What run() would do, without touching the filesystem.
nlohmann::json plan(const ExperimentConfig& config, const std::filesystem::path& output_dir);

struct RunManifest {
    std::filesystem::path path;
    nlohmann::json content;
};

/// Runs the experiment and writes its artifacts into output_dir, manifest last.
/// On failure the `.partial` marker stays behind with the error appended and
/// the error is rethrown with the run directory as context.
RunManifest run(const ExperimentConfig& config, const std::filesystem::path& output_dir);

/// Writes plot-ready CSVs into <run dir>/plot from a completed run.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& manifest);

struct ManifestCheck {
    std::size_t files = 0;
    std::vector<std::string> problems;

    bool ok() const { return problems.empty(); }
};

/// Recomputes every listed checksum and looks for unlisted files.
ManifestCheck verify_manifest(const std::filesystem::path& manifest);

}  // namespace recurflow::cli
