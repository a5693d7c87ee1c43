#include <CLI11.hpp>
#include <iostream>

#include "epr/commands.hpp"
#include "epr/error.hpp"

int main(int argc, char** argv) {
    CLI::App app{"eprkit: evolutionary polynomial regression with Pareto-front model "
                 "selection and hierarchical multiscale pipelines"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand name

    epr::CommandOptions options;
    std::string config_path;
    std::string out_root = "runs";
    std::uint64_t seed_override = 0;
    bool has_seed_override = false;

    app.add_option("-c,--config", config_path, "run configuration file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("-o,--out", out_root, "root directory for run artifacts")
        ->capture_default_str();
    app.add_option("--seed", seed_override, "override the configured seed")
        ->each([&](const std::string&) { has_seed_override = true; });
    app.add_flag("--exhaustive", options.exhaustive,
                 "replace the genetic search with exhaustive enumeration");
    app.add_flag("-v,--verbose", options.verbosity, "more progress output");

    std::string target;
    std::vector<std::string> inputs;
    auto* fit = app.add_subcommand("fit", "search models for one target");
    fit->add_option("--target", target, "target variable")->required();
    fit->add_option("--inputs", inputs,
                    "input variables (default: every other declared variable)")
        ->delimiter(',');

    std::string stage_name;
    auto* stage = app.add_subcommand("stage", "run one configured stage");
    stage->add_option("--name", stage_name, "stage name from the config")->required();

    std::string records_path;
    auto* predict = app.add_subcommand("predict", "chain predictions for new records");
    predict->add_option("--records", records_path, "delimited record table")
        ->required()
        ->check(CLI::ExistingFile);

    auto* correlate = app.add_subcommand(
        "correlate", "compare experimental and model-derived correlation structure");
    auto* report = app.add_subcommand("report", "run all stages and write a full report");

    CLI11_PARSE(app, argc, argv);

    options.config_path = config_path;
    options.out_root = out_root;
    if (has_seed_override) options.seed_override = seed_override;

    try {
        std::filesystem::path run_dir;
        if (fit->parsed()) run_dir = epr::cmd_fit(options, target, inputs);
        else if (stage->parsed()) run_dir = epr::cmd_stage(options, stage_name);
        else if (predict->parsed()) run_dir = epr::cmd_predict(options, records_path);
        else if (correlate->parsed()) run_dir = epr::cmd_correlate(options);
        else if (report->parsed()) run_dir = epr::cmd_report(options);
        std::cout << run_dir.string() << "\n";
        return 0;
    } catch (const epr::Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 2;
    }
}
