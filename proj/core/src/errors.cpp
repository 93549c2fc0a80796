#include "recurflow/errors.hpp"

#include <fmt/format.h>

namespace recurflow {

namespace {

std::string coverage_message(double need_lo, double need_hi, double have_lo, double have_hi) {
    double lo = need_lo < have_lo ? need_lo : have_hi;
    double hi = need_lo < have_lo ? have_lo : need_hi;
    return fmt::format("coverage error: need [{:.17g}, {:.17g}] but path covers [{:.17g}, {:.17g}]; "
                       "missing [{:.17g}, {:.17g}]",
                       need_lo, need_hi, have_lo, have_hi, lo, hi);
}

std::string join_problems(const std::vector<std::string>& problems) {
    std::string out = "invalid config:";
    for (const auto& p : problems) {
        out += "\n  - ";
        out += p;
    }
    return out;
}

}  // namespace

CoverageError::CoverageError(double need_lo, double need_hi, double have_lo, double have_hi)
    : Error(coverage_message(need_lo, need_hi, have_lo, have_hi)),
      missing_lo_(need_lo < have_lo ? need_lo : have_hi),
      missing_hi_(need_lo < have_lo ? have_lo : need_hi) {}

SolverError::SolverError(const std::string& what, double time)
    : Error(fmt::format("{} (t = {:.17g})", what, time)), time_(time) {}

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

}  // namespace recurflow
