#pragma once

// Experiment configuration: a small sectioned key-value format.
//
//   # comment
//   experiment = "recurrent_search"
//   seed = 7
//
//   [quasi_periodic]
//   amplitudes = [0.5, 0.5]
//   frequencies = [1.0, 1.4142135623730951]
//
//   [solver]
//   nu = 1.0
//
// Values are numbers, booleans, double-quoted strings, or flat arrays of
// numbers or of strings.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "recurflow/experiments.hpp"
#include "recurflow/funcspace.hpp"
#include "recurflow/nse2d.hpp"
#include "recurflow/recurrence.hpp"
#include "recurflow/skewprod.hpp"

namespace recurflow::cli {

enum class Experiment { classify_signal, solver_verify, recurrent_search, poisson_search, cocycle_check };

std::string_view to_string(Experiment e);
std::optional<Experiment> parse_experiment(std::string_view name);

using Value = std::variant<bool, double, std::string, std::vector<double>, std::vector<std::string>>;

struct Entry {
    Value value;
    int line = 0;
};

struct Section {
    std::string name;  ///< empty for the top level
    int line = 0;
    std::map<std::string, Entry> entries;
};

/// Sections in file order; the first is always the top level.
struct Document {
    std::vector<Section> sections;

    const Section* find(std::string_view name) const;
};

/// Throws ConfigError listing every syntax problem.
Document parse_document(std::string_view text);

nlohmann::json to_json(const Value& value);
nlohmann::json to_json(const Document& doc);

/// Initial velocity for the solver experiments.
struct InitialCondition {
    enum class Kind { zero, random, kolmogorov };
    Kind kind = Kind::zero;
    double energy = 0.25;  ///< random: target energy; kolmogorov: amplitude
    int kmax = 4;
};

nse2d::SpectralField make_initial(const InitialCondition& ic, int n, std::uint64_t seed);

struct ClassifySettings {
    std::vector<double> epsilon_ladder = {0.5, 0.2, 0.1, 0.05};
    recurrence::ClassifyParams params;
    /// Translates of the signal used as hull samples for the equicontinuity probe.
    std::vector<double> probe_offsets;
};

struct CocycleSettings {
    double t = 0.5;
    double tau = 0.5;
    double tolerance = 1e-8;
    /// States kept every this many steps in the direct-path trajectory.
    std::size_t trajectory_stride = 100;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::classify_signal;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir;  ///< empty when the file names none
    std::filesystem::path source;

    /// Classified signal, or temporal part of the forcing.
    std::optional<funcspace::AnalyticSignal> signal;
    nse2d::SolverConfig solver;
    std::vector<std::array<int, 2>> forcing_modes;
    std::vector<double> forcing_weights;
    std::vector<std::size_t> forcing_components;
    InitialCondition initial;

    ClassifySettings classify;
    experiments::VerifyParams verify;
    skewprod::PoissonSearchParams search;  ///< search.search serves recurrent_search too
    CocycleSettings cocycle;

    std::vector<std::string> warnings;
    Document document;

    /// Forcing field of the solver experiments.
    nse2d::ForcingField forcing() const;
    /// Parsed document plus the fully resolved parameters.
    nlohmann::json echo() const;
};

/// Reads and validates a config file. Throws ConfigError listing every problem.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& source = {});

}  // namespace recurflow::cli
