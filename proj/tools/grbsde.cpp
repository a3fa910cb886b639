#include "grbsde/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <utility>

int main(int argc, char** argv) {
    CLI::App app{"Reflected generalized BSDE laboratory on finite scenario trees"};
    app.require_subcommand(1, 1);

    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    std::string method;

    const std::pair<const char*, const char*> subcommands[] = {
        {"solve", "unreflected equation, Picard iteration and a priori estimates"},
        {"penalize", "penalization sweep over run.n_list with the auxiliary equation"},
        {"reflect", "direct reflected solution, K split, Snell envelope and mirror check"},
        {"stop", "optimal stopping representation of the reflected solution"},
        {"compare", "comparison of ordered data pairs"},
        {"check", "structural assumptions on the configured data"},
    };
    for (const auto& [name, help] : subcommands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "experiment JSON file")->required();
        sub->add_option("--out", out, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "seed for sampling and random pairs (overrides run.seed)");
        if (std::string(name) == "stop") {
            sub->add_option("--method", method, "stopping oracle")->check(CLI::IsMember({"enumerate", "nu_p"}));
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and friends exit 0; every usage error exits 2 like a bad config.
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const auto* sub = app.get_subcommands().front();

    try {
        grbsde::ExperimentConfig cfg = grbsde::parse_config(config);
        if (!method.empty()) {
            cfg.run.method = grbsde::parse_method(method);
        }
        std::optional<std::uint64_t> seed_override;
        if (sub->count("--seed") > 0) {
            seed_override = seed;
        }
        const std::string dir = out.empty() ? cfg.out_dir : out;
        const auto result = grbsde::run_experiment(cfg, grbsde::parse_subcommand(sub->get_name()), dir, seed_override);
        for (const auto& l : result.lines) {
            std::cout << (l.asserted ? (l.passed ? "PASS " : "FAIL ") : "INFO ") << l.name << ' '
                      << grbsde::format_real(l.value) << '\n';
        }
        std::cout << (result.passed() ? "RESULT PASS" : "RESULT FAIL") << '\n';
        return result.exit_code();
    } catch (const grbsde::ConfigError& e) {
        std::cerr << "error: config-error\n";
        for (const auto& v : e.violations()) {
            std::cerr << "  " << v.pointer << ": " << v.message << '\n';
        }
        return 2;
    } catch (const grbsde::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
