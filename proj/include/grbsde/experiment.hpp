#pragma once

#include "grbsde/config.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace grbsde {

enum class Subcommand { solve, penalize, reflect, stop, compare, check };

std::string subcommand_name(Subcommand s);
/// Throws config-error on an unknown name.
Subcommand parse_subcommand(const std::string& s);

struct SummaryLine {
    std::string name;
    bool asserted = true;  // false: value is reported only
    bool passed = true;
    double value = 0.0;
};

struct ExperimentResult {
    std::vector<SummaryLine> lines;
    std::vector<std::string> files;  // written artifacts, relative to the output directory

    bool passed() const;
    int exit_code() const { return passed() ? 0 : 1; }
};

/// "%.17g"; NaN and infinities spelled nan, inf, -inf.
std::string format_real(double x);

/**
 * Runs one pipeline and writes its CSV reports plus summary.txt into `out_dir`
 * (created when missing). `seed` overrides the configured seed.
 */
ExperimentResult run_experiment(const ExperimentConfig& cfg, Subcommand cmd, const std::string& out_dir,
                                std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace grbsde
