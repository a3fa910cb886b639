#pragma once

#include "grbsde/error.hpp"
#include "grbsde/model.hpp"
#include "grbsde/scenario.hpp"
#include "grbsde/stopping.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace grbsde {

struct BarrierSpec {
    Side side = Side::lower;
    StateFunction level;
    std::vector<std::size_t> jump_layers;  // layers flagged as scheduled barrier drops
};

struct DriverSpec {
    DriverForm form = DriverForm::linear;
    double a = 0.0;
    double cubic = 0.0;
    std::vector<double> b;
    std::vector<double> c;
    StateFunction h;
    double g_slope = 0.0;
    StateFunction g_shift;
    double alpha = 0.0;
    double beta = -1.0;
    double kappa = 1.0;
    std::optional<StateFunction> phi;
    std::optional<StateFunction> psi;
};

struct ProblemSpec {
    DriverSpec driver;
    StateFunction xi;
    std::optional<BarrierSpec> barrier;
    double mu = 2.0;

    ProblemData instantiate(const ScenarioTree& tree) const;
};

struct RunSpec {
    std::vector<double> n_list{1.0, 10.0, 100.0, 1000.0, 10000.0};
    std::vector<double> p_list{1.0, 10.0, 100.0};
    double tol = 1e-10;
    std::uint64_t seed = 0;
    std::size_t samples = 1000;
    double enumeration_cap = default_enumeration_cap;
    StopMethod method = StopMethod::enumerate;
    std::size_t start_layer = 0;
    std::size_t picard_max_iters = 50;
    double picard_tol = 1e-20;
    std::vector<double> nu;        // per-mark bound for the gamma condition; empty means skip
    std::size_t random_pairs = 0;  // extra seeded ordered pairs for `compare`
};

struct ExperimentConfig {
    TreeConfig tree;
    ProblemSpec problem;
    std::optional<ProblemSpec> compare;
    RunSpec run;
    std::string out_dir = "out";
};

struct ConfigViolation {
    std::string pointer;  // JSON pointer into the document
    std::string message;
};

/// config-error carrying every violation found, not just the first.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigViolation> violations);
    const std::vector<ConfigViolation>& violations() const noexcept { return violations_; }

private:
    std::vector<ConfigViolation> violations_;
};

/// Reads and validates an experiment file. Throws io-error when it cannot be read.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

}  // namespace grbsde
