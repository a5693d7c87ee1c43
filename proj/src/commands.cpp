#include "epr/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "epr/artifacts.hpp"
#include "epr/error.hpp"

namespace epr {

namespace {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string short_hash(const std::string& text) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08llx",
                  static_cast<unsigned long long>(fnv1a(text) >> 32));
    return buf;
}

std::string sanitize(const std::string& name) {
    std::string out;
    for (const char c : name) out += (c == '/' || c == '\\' || (unsigned char)c < 0x20) ? '_' : c;
    return out;
}

struct RunContext {
    RunConfig config;
    Dataset dataset;
    std::filesystem::path run_dir;
};

RunContext open_run(const CommandOptions& options) {
    RunConfig config = load_run_config(options.config_path);
    if (options.seed_override) {
        config.effective["ga"]["seed"] = *options.seed_override;
        config = parse_run_config(config.effective);
    }
    const std::string hash = config_hash(config.effective);
    std::filesystem::path run_dir =
        options.out_root / (hash + "-s" + std::to_string(config.ga.seed));
    std::filesystem::create_directories(run_dir);
    write_text_file(run_dir / "config.json", config.effective.dump(2) + "\n");
    Dataset dataset = load_configured_dataset(config);
    return RunContext{std::move(config), std::move(dataset), std::move(run_dir)};
}

ParetoFront search_front(const Dataset& dataset, const CaseView& view, const EprConfig& epr,
                         const GaConfig& ga, bool exhaustive) {
    return exhaustive ? exhaustive_search(dataset, view, epr)
                      : evolve(dataset, view, epr, ga);
}

/// Mean |rho| between the view's target and its inputs on the view rows;
/// empty when a pair is degenerate there.
std::optional<double> view_mean_abs_correlation(const Dataset& dataset,
                                                const CaseView& view) {
    try {
        std::vector<std::string> names{view.target};
        names.insert(names.end(), view.inputs.begin(), view.inputs.end());
        const CorrelationMatrix matrix =
            correlation_matrix(dataset, names, view.row_indices);
        return mean_abs_correlation(matrix, view.target, view.inputs);
    } catch (const Error&) {
        return std::nullopt;
    }
}

void write_front_artifacts(const std::filesystem::path& dir, const Dataset& dataset,
                           const CaseView& view, const ParetoFront& front,
                           int render_precision) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "front.csv", front_csv(front, render_precision));

    std::ostringstream header;
    header << "target: " << view.target << '\n';
    header << "inputs: ";
    for (std::size_t i = 0; i < view.inputs.size(); ++i)
        header << (i ? ", " : "") << view.inputs[i];
    header << '\n';
    header << "rows: " << view.row_indices.size() << '\n';
    const auto rho = view_mean_abs_correlation(dataset, view);
    header << "mean |rho| target vs inputs: "
           << (rho ? format_number(*rho, 6) : std::string("n/a")) << "\n\n";
    write_text_file(dir / "front.txt", header.str() + front_text(front, render_precision));
    write_text_file(dir / "r2_curve.csv", r2_curve_csv(front));
}

std::vector<std::string> default_inputs(const RunConfig& config, const std::string& target) {
    std::vector<std::string> inputs;
    for (const auto& spec : config.dataset.variables)
        if (spec.name != target) inputs.push_back(spec.name);
    return inputs;
}

const StageSpec& find_stage(const RunConfig& config, const std::string& name) {
    for (const auto& stage : config.stages)
        if (stage.name == name) return stage;
    throw ConfigError("config declares no stage named '" + name + "'");
}

StageResult run_stage_with_toggle(const Dataset& dataset, const StageSpec& stage,
                                  bool exhaustive) {
    if (!exhaustive) return run_stage(dataset, stage);
    StageResult result;
    for (const auto& target : stage.targets) {
        try {
            const CaseView view = complete_cases(dataset, target, stage.inputs);
            result.fronts.emplace_back(target, exhaustive_search(dataset, view, stage.epr));
        } catch (const Error& e) {
            result.failures.emplace_back(target, e.what());
        }
    }
    return result;
}

StageResult write_stage_artifacts(const RunContext& ctx, const StageSpec& stage,
                                  bool exhaustive, int verbosity) {
    if (verbosity > 0)
        std::cerr << "stage " << stage.name << ": searching " << stage.targets.size()
                  << " target(s)" << (exhaustive ? " exhaustively" : "") << "\n";
    const StageResult result = run_stage_with_toggle(ctx.dataset, stage, exhaustive);
    const auto stage_dir = ctx.run_dir / ("stage_" + sanitize(stage.name));
    std::filesystem::create_directories(stage_dir);

    std::ostringstream summary;
    summary << "stage: " << stage.name << '\n';
    summary << "inputs: ";
    for (std::size_t i = 0; i < stage.inputs.size(); ++i)
        summary << (i ? ", " : "") << stage.inputs[i];
    summary << "\n\n";
    for (const auto& [target, front] : result.fronts) {
        const CaseView view = complete_cases(ctx.dataset, target, stage.inputs);
        write_front_artifacts(stage_dir / sanitize(target), ctx.dataset, view, front,
                              ctx.config.render_precision);
        const auto rho = view_mean_abs_correlation(ctx.dataset, view);
        double best_r2 = -std::numeric_limits<double>::infinity();
        for (const auto& entry : front.entries())
            best_r2 = std::max(best_r2, entry.model.fit().r_squared);
        summary << "target " << target << ": " << front.size() << " models, rows="
                << view.row_indices.size() << ", best r_squared="
                << format_number(best_r2, 6) << ", mean |rho|="
                << (rho ? format_number(*rho, 6) : std::string("n/a")) << '\n';
    }
    for (const auto& [target, message] : result.failures)
        summary << "target " << target << ": FAILED: " << message << '\n';
    write_text_file(stage_dir / "summary.txt", summary.str());
    return result;
}

struct SelectedModel {
    PlanModelRef ref;
    ParetoFront front;
    CaseView view;
    std::size_t index = 0;  // 0-based into the front
    std::string rationale;
};

struct PlanBuild {
    std::vector<SelectedModel> picks;
    HierarchyPlan plan;
};

PlanBuild build_plan(const RunConfig& config, const Dataset& dataset, bool exhaustive,
                     int verbosity = 0) {
    if (!config.plan)
        throw ConfigError("config has no plan section; predict/correlate need one");

    std::vector<SelectedModel> picks;
    for (const auto& ref : config.plan->models) {
        const StageSpec& stage = find_stage(config, ref.stage);
        if (verbosity > 0)
            std::cerr << "plan: searching '" << ref.target << "' in stage '" << ref.stage
                      << "'\n";
        CaseView view = complete_cases(dataset, ref.target, stage.inputs);
        ParetoFront front = search_front(dataset, view, stage.epr, stage.ga, exhaustive);

        SelectedModel pick{ref, std::move(front), std::move(view), 0, ""};
        const auto selection =
            std::find_if(config.selections.begin(), config.selections.end(),
                         [&](const ModelSelection& s) {
                             return s.stage == ref.stage && s.target == ref.target;
                         });
        if (selection != config.selections.end()) {
            if (selection->model_index > pick.front.size())
                throw ConfigError("selection model " + std::to_string(selection->model_index) +
                                  " for target '" + ref.target + "' in stage '" + ref.stage +
                                  "' is outside the front (size " +
                                  std::to_string(pick.front.size()) + ")");
            pick.index = selection->model_index - 1;
            pick.rationale = selection->rationale;
        } else {
            pick.index = knee_selection(pick.front, config.knee_threshold);
            pick.rationale = "knee default";
        }
        picks.push_back(std::move(pick));
    }

    std::vector<HierarchyPlan::Node> nodes;
    for (const auto& pick : picks)
        nodes.push_back({pick.ref.target, pick.front[pick.index].model, pick.ref.direct_link});
    HierarchyPlan plan(std::move(nodes), config.plan->passthrough, dataset);
    return PlanBuild{std::move(picks), std::move(plan)};
}

std::vector<std::string> study_variables(const RunConfig& config) {
    if (config.plan && !config.plan->study_variables.empty())
        return config.plan->study_variables;
    std::vector<std::string> all;
    for (const auto& spec : config.dataset.variables) all.push_back(spec.name);
    return all;
}

void write_study_artifacts(const std::filesystem::path& dir, const Dataset& dataset,
                           const HierarchyPlan& plan, const RunConfig& config,
                           CorrelationComparison* out_comparison) {
    const auto variables = study_variables(config);
    const std::size_t rows_used = complete_rows(dataset, variables).size();
    const CorrelationComparison comparison = correlation_study(dataset, plan, variables);
    std::filesystem::create_directories(dir);
    write_text_file(dir / "experimental.csv", correlation_csv(comparison.experimental));
    write_text_file(dir / "theoretical.csv", correlation_csv(comparison.theoretical));
    write_text_file(dir / "relative_error.csv",
                    grid_csv(comparison.experimental.variable_names,
                             comparison.relative_errors));
    write_text_file(dir / "comparison.txt",
                    comparison_text(comparison, rows_used,
                                    "listwise complete over the study variables"));
    if (out_comparison) *out_comparison = comparison;
}

/// Advisory check: does the selected model's trend in each input match the
/// sign of the experimental correlation on the training rows?
std::vector<std::string> sign_advisories(const Dataset& dataset, const SelectedModel& pick) {
    std::vector<std::string> lines;
    const FittedModel& model = pick.front[pick.index].model;
    const auto& structure = model.structure();

    std::map<std::string, double> median_record;
    for (const auto& name : structure.variable_names()) {
        std::vector<double> values;
        const std::size_t col = dataset.index_of(name);
        for (const std::size_t r : pick.view.row_indices)
            values.push_back(dataset.value(r, col));
        std::sort(values.begin(), values.end());
        median_record[name] = values[values.size() / 2];
    }

    const std::size_t target_col = dataset.index_of(pick.view.target);
    for (std::size_t j = 0; j < structure.input_count(); ++j) {
        bool used = false;
        for (const auto& row : structure.rows())
            if (row[j] != 0.0) used = true;
        if (!used) continue;
        const std::string& input = structure.variable_names()[j];
        try {
            const std::size_t input_col = dataset.index_of(input);
            std::vector<double> x, y;
            for (const std::size_t r : pick.view.row_indices) {
                x.push_back(dataset.value(r, input_col));
                y.push_back(dataset.value(r, target_col));
            }
            const double rho = pearson(x, y);

            std::map<std::string, double> lo = median_record, hi = median_record;
            const double h = 1e-6 * std::abs(median_record[input]);
            lo[input] -= h;
            hi[input] += h;
            const double derivative = (model.evaluate(hi) - model.evaluate(lo)) / (2.0 * h);
            if (std::abs(rho) > 0.05 && std::abs(derivative) > 0.0 &&
                std::signbit(derivative) != std::signbit(rho))
                lines.push_back("model for '" + pick.ref.target + "': trend in '" + input +
                                "' has sign " + (derivative < 0 ? "-" : "+") +
                                " but the experimental correlation is " +
                                format_number(rho, 3));
        } catch (const Error&) {
            // degenerate column or non-evaluable median point: nothing to say
        }
    }
    return lines;
}

}  // namespace

std::filesystem::path cmd_fit(const CommandOptions& options, const std::string& target,
                              std::vector<std::string> inputs) {
    RunContext ctx = open_run(options);
    if (inputs.empty()) inputs = default_inputs(ctx.config, target);
    const CaseView view = complete_cases(ctx.dataset, target, inputs);
    const ParetoFront front =
        search_front(ctx.dataset, view, ctx.config.epr, ctx.config.ga, options.exhaustive);

    std::string signature = target;
    for (const auto& name : inputs) signature += "\x1f" + name;
    if (options.exhaustive) signature += "\x1f" "exhaustive";
    const auto dir = ctx.run_dir / ("fit_" + sanitize(target) + "-" + short_hash(signature));
    write_front_artifacts(dir, ctx.dataset, view, front, ctx.config.render_precision);

    std::vector<std::size_t> warned;
    for (std::size_t i = 0; i < front.size(); ++i)
        if (front[i].model.fit().condition_warning) warned.push_back(i);
    if (!warned.empty()) {
        std::string which;
        for (std::size_t i = 0; i < warned.size(); ++i)
            which += (i ? ", " : "") + std::to_string(warned[i] + 1);
        throw DataError("front for '" + target + "' contains rank-deficient models (" +
                        which + "); artifacts were written to " + dir.string());
    }
    return ctx.run_dir;
}

std::filesystem::path cmd_stage(const CommandOptions& options,
                                const std::string& stage_name) {
    RunContext ctx = open_run(options);
    const StageSpec& stage = find_stage(ctx.config, stage_name);
    const StageResult result =
        write_stage_artifacts(ctx, stage, options.exhaustive, options.verbosity);
    for (const auto& [target, message] : result.failures)
        std::cerr << "warning: target '" << target << "' failed: " << message << "\n";
    if (result.fronts.empty()) {
        std::string detail;
        for (const auto& [target, message] : result.failures)
            detail += (detail.empty() ? "" : "; ") + target + ": " + message;
        throw SearchError("stage '" + stage_name + "': every target failed (" + detail + ")");
    }
    return ctx.run_dir;
}

std::filesystem::path cmd_predict(const CommandOptions& options,
                                  const std::filesystem::path& records_path) {
    RunContext ctx = open_run(options);
    const PlanBuild build =
        build_plan(ctx.config, ctx.dataset, options.exhaustive, options.verbosity);

    // Load the record table with whatever declared variables its header names.
    std::ifstream probe(records_path);
    if (!probe) throw IoError("cannot open record file '" + records_path.string() + "'");
    std::string header_line;
    if (!std::getline(probe, header_line))
        throw DataError("record file '" + records_path.string() + "' is empty");
    probe.close();

    std::vector<VariableSpec> subset;
    {
        std::istringstream hs(header_line);
        std::string cell;
        while (std::getline(hs, cell, ctx.config.dataset.delimiter)) {
            const auto start = cell.find_first_not_of(" \t\r\n");
            const auto end = cell.find_last_not_of(" \t\r\n");
            const std::string name =
                start == std::string::npos ? "" : cell.substr(start, end - start + 1);
            for (const auto& spec : ctx.config.dataset.variables)
                if (spec.name == name) subset.push_back(spec);
        }
    }
    if (subset.empty())
        throw DataError("record file '" + records_path.string() +
                        "' shares no columns with the declared variables");
    LoadOptions load_options;
    load_options.delimiter = ctx.config.dataset.delimiter;
    load_options.missing_token = ctx.config.dataset.missing_token;
    const Dataset records = load_dataset(records_path, subset, load_options);

    std::ostringstream os;
    os << "record";
    for (const auto& name : build.plan.required_inputs()) os << ',' << csv_quote(name);
    for (const auto& node : build.plan.nodes()) os << ',' << csv_quote(node.target);
    os << '\n';
    for (std::size_t r = 0; r < records.n_rows(); ++r) {
        std::map<std::string, double> record;
        for (std::size_t c = 0; c < records.n_vars(); ++c)
            if (!records.is_missing(r, c))
                record[records.variables()[c].name] = records.value(r, c);
        std::map<std::string, double> predictions;
        try {
            predictions = chain_predict(build.plan, record);
        } catch (const Error& e) {
            throw PlanError("record " + std::to_string(r + 1) + ": " + e.what());
        }
        os << (r + 1);
        for (const auto& name : build.plan.required_inputs())
            os << ',' << format_number(record.at(name), 17);
        for (const auto& node : build.plan.nodes())
            os << ',' << format_number(predictions.at(node.target), 17);
        os << '\n';
    }

    std::ifstream raw(records_path, std::ios::binary);
    std::stringstream raw_content;
    raw_content << raw.rdbuf();
    const auto dir = ctx.run_dir / ("predict-" + short_hash(raw_content.str()));
    std::filesystem::create_directories(dir);
    write_text_file(dir / "predictions.csv", os.str());
    return ctx.run_dir;
}

std::filesystem::path cmd_correlate(const CommandOptions& options) {
    RunContext ctx = open_run(options);
    const PlanBuild build =
        build_plan(ctx.config, ctx.dataset, options.exhaustive, options.verbosity);
    write_study_artifacts(ctx.run_dir / "correlate", ctx.dataset, build.plan, ctx.config,
                          nullptr);
    return ctx.run_dir;
}

std::filesystem::path cmd_report(const CommandOptions& options) {
    RunContext ctx = open_run(options);
    std::ostringstream report;
    report << "eprkit report\n";
    report << "config hash: " << config_hash(ctx.config.effective) << '\n';
    report << "seed: " << ctx.config.ga.seed << '\n';
    report << "dataset: " << ctx.dataset.source() << " (" << ctx.dataset.n_rows()
           << " rows)\n";
    for (const Tier tier : {Tier::micro, Tier::meso, Tier::macro}) {
        const auto names = tier_variables(ctx.dataset, tier);
        if (names.empty()) continue;
        report << "  " << to_string(tier) << ":";
        for (const auto& name : names) report << ' ' << name;
        report << '\n';
    }
    report << '\n';

    // Pairwise-complete correlations over the full table, when computable.
    {
        std::vector<std::string> all;
        for (const auto& spec : ctx.dataset.variables()) all.push_back(spec.name);
        try {
            const CorrelationMatrix matrix = correlation_matrix(ctx.dataset, all);
            write_text_file(ctx.run_dir / "correlations_pairwise.csv",
                            correlation_csv(matrix));
            report << "pairwise experimental correlations: correlations_pairwise.csv\n\n";
        } catch (const Error& e) {
            report << "pairwise experimental correlations unavailable: " << e.what()
                   << "\n\n";
        }
    }

    for (const auto& stage : ctx.config.stages) {
        const StageResult result =
            write_stage_artifacts(ctx, stage, options.exhaustive, options.verbosity);
        report << "stage " << stage.name << " (artifacts under stage_"
               << sanitize(stage.name) << "/)\n";
        for (const auto& [target, front] : result.fronts) {
            double best_r2 = -std::numeric_limits<double>::infinity();
            for (const auto& entry : front.entries())
                best_r2 = std::max(best_r2, entry.model.fit().r_squared);
            report << "  " << target << ": " << front.size()
                   << " models on the front, best r_squared " << format_number(best_r2, 6)
                   << '\n';
        }
        for (const auto& [target, message] : result.failures)
            report << "  " << target << ": FAILED: " << message << '\n';
        report << '\n';
    }

    if (ctx.config.plan) {
        const PlanBuild build =
            build_plan(ctx.config, ctx.dataset, options.exhaustive, options.verbosity);
        report << "selected models\n";
        for (const auto& pick : build.picks) {
            const auto& entry = pick.front[pick.index];
            report << "  " << pick.ref.target << " = "
                   << render(entry.model, ctx.config.render_precision) << '\n';
            report << "    stage " << pick.ref.stage << ", model " << (pick.index + 1)
                   << " of " << pick.front.size() << ", r_squared "
                   << format_number(entry.model.fit().r_squared, 6)
                   << (pick.ref.direct_link ? ", direct link" : "") << " ("
                   << pick.rationale << ")\n";
        }
        report << '\n';

        CorrelationComparison comparison;
        write_study_artifacts(ctx.run_dir / "correlate", ctx.dataset, build.plan,
                              ctx.config, &comparison);
        report << "correlation study (tables under correlate/)\n";
        report << "  mean relative error: "
               << format_number(comparison.mean_relative_error, 6) << '\n';
        report << '\n';

        std::vector<std::string> advisories;
        for (const auto& pick : build.picks)
            for (const auto& line : sign_advisories(ctx.dataset, pick))
                advisories.push_back(line);
        if (!advisories.empty()) {
            report << "advisories\n";
            for (const auto& line : advisories) report << "  " << line << '\n';
            report << '\n';
        }
    }

    write_text_file(ctx.run_dir / "report.txt", report.str());
    return ctx.run_dir;
}

}  // namespace epr
