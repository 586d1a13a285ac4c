#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "paneldml/config.hpp"
#include "paneldml/runner.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> folds;
    std::optional<std::string> learner;
};

// Each subcommand shares the same flag set; the subcommand name must match
// the config file's command section.
CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help,
                      CliArgs& args) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", args.config_path, "JSON run configuration (comments allowed)")
        ->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out", args.out, "override the output directory");
    cmd->add_option("--folds", args.folds, "override the cross-fitting fold count");
    cmd->add_option("--learner", args.learner,
                    "override both nuisance learners (tree, forest, gbt, lasso, mlp)");
    return cmd;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"panel causal inference toolkit"};
    app.require_subcommand(1);

    CliArgs args;
    CLI::App* indicators =
        add_command(app, "indicators", "build indicator columns from raw panel data", args);
    CLI::App* estimate = add_command(app, "estimate", "cross-fitted treatment effect", args);
    CLI::App* robustness = add_command(app, "robustness", "estimate plus variant battery", args);
    CLI::App* simulate = add_command(app, "simulate", "Monte Carlo on the synthetic oracle", args);

    CLI11_PARSE(app, argc, argv);

    try {
        paneldml::CliOverrides overrides;
        overrides.seed = args.seed;
        overrides.out = args.out;
        overrides.folds = args.folds;
        overrides.learner = args.learner;
        paneldml::RunConfig config = paneldml::load_run_config(args.config_path, overrides);

        paneldml::Command requested = paneldml::Command::Estimate;
        if (indicators->parsed()) requested = paneldml::Command::Indicators;
        else if (estimate->parsed()) requested = paneldml::Command::Estimate;
        else if (robustness->parsed()) requested = paneldml::Command::Robustness;
        else if (simulate->parsed()) requested = paneldml::Command::Simulate;
        if (config.command != requested)
            throw paneldml::UserError("config file defines a '" + to_string(config.command) +
                                      "' run, but the '" + to_string(requested) +
                                      "' subcommand was invoked");

        paneldml::run_command(config);
        return 0;
    } catch (const paneldml::UserError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
