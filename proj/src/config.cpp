#include "epr/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include "epr/error.hpp"

namespace epr {

namespace {

using nlohmann::json;

const json& require(const json& object, const std::string& key, const std::string& where) {
    if (!object.is_object() || !object.contains(key))
        throw ConfigError(where + " is missing required key '" + key + "'");
    return object.at(key);
}

std::string as_string(const json& value, const std::string& where) {
    if (!value.is_string()) throw ConfigError(where + " must be a string");
    return value.get<std::string>();
}

double as_number(const json& value, const std::string& where) {
    if (!value.is_number()) throw ConfigError(where + " must be a number");
    return value.get<double>();
}

bool as_bool(const json& value, const std::string& where) {
    if (!value.is_boolean()) throw ConfigError(where + " must be a boolean");
    return value.get<bool>();
}

std::size_t as_count(const json& value, const std::string& where) {
    if (!value.is_number_integer() || value.get<long long>() < 0)
        throw ConfigError(where + " must be a non-negative integer");
    return value.get<std::size_t>();
}

std::vector<std::string> as_names(const json& value, const std::string& where) {
    if (!value.is_array()) throw ConfigError(where + " must be an array of names");
    std::vector<std::string> names;
    for (const auto& item : value) names.push_back(as_string(item, where + " entry"));
    return names;
}

void reject_unknown_keys(const json& object, const std::set<std::string>& known,
                         const std::string& where) {
    if (!object.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : object.items())
        if (!known.contains(key))
            throw ConfigError(where + " has unknown key '" + key + "'");
}

json epr_defaults() {
    return json{{"exponents", {-1.0, -0.5, 0.0, 0.5, 1.0}},
                {"max_terms", 3},
                {"bias", true},
                {"mode", "unconstrained"},
                {"significance_multiplier", 2.0},
                {"max_prune_iterations", 32},
                {"exhaustive_cap", 1000000},
                {"render_precision", 5},
                {"knee_threshold", 0.1}};
}

// mutation_rate is absent when automatic: JSON merge-patch treats null as a
// key deletion, so absence is the only representation that echoes verbatim.
json ga_defaults() {
    return json{{"population", 100},
                {"generations", 200},
                {"crossover_rate", 0.9},
                {"elitism", true}};
}

EprConfig parse_epr(const json& section, int* render_precision, double* knee_threshold) {
    reject_unknown_keys(section,
                        {"exponents", "max_terms", "bias", "mode",
                         "significance_multiplier", "max_prune_iterations",
                         "exhaustive_cap", "render_precision", "knee_threshold"},
                        "epr section");
    const auto& exponents_json = require(section, "exponents", "epr section");
    if (!exponents_json.is_array() || exponents_json.empty())
        throw ConfigError("epr.exponents must be a non-empty array");
    std::vector<double> exponents;
    for (const auto& e : exponents_json) exponents.push_back(as_number(e, "epr.exponents entry"));

    EprConfig epr;
    epr.exponents = CandidateExponents(std::move(exponents));
    epr.max_terms = as_count(require(section, "max_terms", "epr section"), "epr.max_terms");
    if (epr.max_terms < 1) throw ConfigError("epr.max_terms must be at least 1");
    epr.fit.bias = as_bool(require(section, "bias", "epr section"), "epr.bias");
    epr.fit.mode =
        fit_mode_from_string(as_string(require(section, "mode", "epr section"), "epr.mode"));
    epr.fit.significance_multiplier = as_number(
        require(section, "significance_multiplier", "epr section"),
        "epr.significance_multiplier");
    if (!(epr.fit.significance_multiplier > 0.0) ||
        !std::isfinite(epr.fit.significance_multiplier))
        throw ConfigError("epr.significance_multiplier must be finite and positive");
    epr.fit.max_prune_iterations = static_cast<int>(as_count(
        require(section, "max_prune_iterations", "epr section"), "epr.max_prune_iterations"));
    if (epr.fit.max_prune_iterations < 1)
        throw ConfigError("epr.max_prune_iterations must be at least 1");
    epr.exhaustive_cap =
        as_count(require(section, "exhaustive_cap", "epr section"), "epr.exhaustive_cap");

    const auto precision = as_count(require(section, "render_precision", "epr section"),
                                    "epr.render_precision");
    if (precision < 1 || precision > 17)
        throw ConfigError("epr.render_precision must lie in [1, 17]");
    if (render_precision) *render_precision = static_cast<int>(precision);
    const double knee =
        as_number(require(section, "knee_threshold", "epr section"), "epr.knee_threshold");
    if (!(knee >= 0.0)) throw ConfigError("epr.knee_threshold must be non-negative");
    if (knee_threshold) *knee_threshold = knee;
    return epr;
}

GaConfig parse_ga(const json& section) {
    reject_unknown_keys(section,
                        {"population", "generations", "crossover_rate", "mutation_rate",
                         "seed", "elitism"},
                        "ga section");
    GaConfig ga;
    ga.population_size =
        as_count(require(section, "population", "ga section"), "ga.population");
    ga.generations = as_count(require(section, "generations", "ga section"), "ga.generations");
    ga.crossover_rate =
        as_number(require(section, "crossover_rate", "ga section"), "ga.crossover_rate");
    if (section.contains("mutation_rate") && !section.at("mutation_rate").is_null())
        ga.mutation_rate = as_number(section.at("mutation_rate"), "ga.mutation_rate");
    // The seed is mandatory: every run must be reproducible, so wall-clock
    // seeding is not available.
    const auto& seed = require(section, "seed", "ga section");
    if (!seed.is_number_integer())
        throw ConfigError("ga.seed must be an integer (runs are always seeded)");
    ga.seed = seed.get<std::uint64_t>();
    ga.elitism = as_bool(require(section, "elitism", "ga section"), "ga.elitism");
    if (ga.population_size < 2) throw ConfigError("ga.population must be at least 2");
    if (ga.generations < 1) throw ConfigError("ga.generations must be at least 1");
    if (!(ga.crossover_rate >= 0.0 && ga.crossover_rate <= 1.0))
        throw ConfigError("ga.crossover_rate must lie in [0, 1]");
    if (ga.mutation_rate && !(*ga.mutation_rate >= 0.0 && *ga.mutation_rate <= 1.0))
        throw ConfigError("ga.mutation_rate must lie in [0, 1]");
    return ga;
}

}  // namespace

nlohmann::json resolve_config_defaults(const nlohmann::json& raw,
                                       const std::filesystem::path& base_dir) {
    if (!raw.is_object()) throw ConfigError("configuration root must be an object");
    json resolved = raw;

    json& dataset = resolved["dataset"];
    if (!dataset.is_object()) throw ConfigError("config is missing the dataset section");
    if (!dataset.contains("delimiter")) dataset["delimiter"] = ",";
    if (!dataset.contains("missing_token")) dataset["missing_token"] = "";
    if (dataset.contains("path") && dataset["path"].is_string()) {
        std::filesystem::path p = dataset["path"].get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        dataset["path"] = p.lexically_normal().string();
    }
    if (dataset.contains("variables") && dataset["variables"].is_array()) {
        for (auto& variable : dataset["variables"]) {
            if (!variable.is_object()) continue;
            if (!variable.contains("description")) variable["description"] = "";
            if (!variable.contains("unit")) variable["unit"] = "";
        }
    }

    json epr = epr_defaults();
    if (resolved.contains("epr")) epr.merge_patch(resolved["epr"]);
    resolved["epr"] = epr;

    json ga = ga_defaults();
    if (resolved.contains("ga")) ga.merge_patch(resolved["ga"]);
    resolved["ga"] = ga;

    if (!resolved.contains("stages")) resolved["stages"] = json::array();
    if (!resolved.contains("selections")) resolved["selections"] = json::array();
    for (auto& selection : resolved["selections"])
        if (selection.is_object() && !selection.contains("rationale"))
            selection["rationale"] = "";
    if (resolved.contains("plan") && resolved["plan"].is_object()) {
        json& plan = resolved["plan"];
        if (!plan.contains("passthrough")) plan["passthrough"] = json::array();
        if (!plan.contains("study_variables")) plan["study_variables"] = json::array();
        for (auto& model : plan["models"])
            if (model.is_object() && !model.contains("direct_link"))
                model["direct_link"] = false;
    }
    return resolved;
}

RunConfig parse_run_config(const nlohmann::json& resolved) {
    reject_unknown_keys(resolved, {"dataset", "epr", "ga", "stages", "selections", "plan"},
                        "configuration");
    RunConfig config;
    config.effective = resolved;

    const json& dataset = require(resolved, "dataset", "configuration");
    reject_unknown_keys(dataset, {"path", "delimiter", "missing_token", "variables"},
                        "dataset section");
    config.dataset.path = as_string(require(dataset, "path", "dataset section"),
                                    "dataset.path");
    const std::string delimiter =
        as_string(require(dataset, "delimiter", "dataset section"), "dataset.delimiter");
    if (delimiter.size() != 1)
        throw ConfigError("dataset.delimiter must be a single character");
    config.dataset.delimiter = delimiter[0];
    config.dataset.missing_token = as_string(
        require(dataset, "missing_token", "dataset section"), "dataset.missing_token");

    const json& variables = require(dataset, "variables", "dataset section");
    if (!variables.is_array() || variables.empty())
        throw ConfigError("dataset.variables must be a non-empty array");
    std::unordered_set<std::string> declared;
    for (const auto& variable : variables) {
        reject_unknown_keys(variable, {"name", "tier", "description", "unit"},
                            "variable entry");
        VariableSpec spec;
        spec.name = as_string(require(variable, "name", "variable entry"), "variable.name");
        spec.tier = tier_from_string(
            as_string(require(variable, "tier", "variable entry"), "variable.tier"));
        spec.description = as_string(require(variable, "description", "variable entry"),
                                     "variable.description");
        spec.unit = as_string(require(variable, "unit", "variable entry"), "variable.unit");
        if (!declared.insert(spec.name).second)
            throw ConfigError("variable '" + spec.name + "' declared twice");
        config.dataset.variables.push_back(std::move(spec));
    }

    config.epr = parse_epr(require(resolved, "epr", "configuration"),
                           &config.render_precision, &config.knee_threshold);
    config.ga = parse_ga(require(resolved, "ga", "configuration"));

    std::unordered_set<std::string> stage_names;
    for (const auto& stage_json : require(resolved, "stages", "configuration")) {
        reject_unknown_keys(stage_json, {"name", "targets", "inputs", "epr", "ga"},
                            "stage entry");
        StageSpec stage;
        stage.name = as_string(require(stage_json, "name", "stage entry"), "stage.name");
        if (!stage_names.insert(stage.name).second)
            throw ConfigError("stage '" + stage.name + "' declared twice");
        stage.targets = as_names(require(stage_json, "targets", "stage entry"),
                                 "stage '" + stage.name + "' targets");
        stage.inputs = as_names(require(stage_json, "inputs", "stage entry"),
                                "stage '" + stage.name + "' inputs");
        if (stage.targets.empty() || stage.inputs.empty())
            throw ConfigError("stage '" + stage.name + "' needs targets and inputs");
        for (const auto& name : stage.targets)
            if (!declared.contains(name))
                throw ConfigError("stage '" + stage.name + "' target '" + name +
                                  "' is not a declared variable");
        for (const auto& name : stage.inputs) {
            if (!declared.contains(name))
                throw ConfigError("stage '" + stage.name + "' input '" + name +
                                  "' is not a declared variable");
            if (std::find(stage.targets.begin(), stage.targets.end(), name) !=
                stage.targets.end())
                throw ConfigError("stage '" + stage.name + "': '" + name +
                                  "' is both a target and an input");
        }

        json stage_epr = resolved.at("epr");
        if (stage_json.contains("epr")) stage_epr.merge_patch(stage_json.at("epr"));
        stage.epr = parse_epr(stage_epr, nullptr, nullptr);
        json stage_ga = resolved.at("ga");
        if (stage_json.contains("ga")) stage_ga.merge_patch(stage_json.at("ga"));
        stage.ga = parse_ga(stage_ga);
        config.stages.push_back(std::move(stage));
    }

    const auto find_stage = [&](const std::string& name) -> const StageSpec& {
        for (const auto& stage : config.stages)
            if (stage.name == name) return stage;
        throw ConfigError("reference to unknown stage '" + name + "'");
    };

    std::set<std::pair<std::string, std::string>> selection_keys;
    for (const auto& selection_json : require(resolved, "selections", "configuration")) {
        reject_unknown_keys(selection_json, {"stage", "target", "model", "rationale"},
                            "selection entry");
        ModelSelection selection;
        selection.stage =
            as_string(require(selection_json, "stage", "selection entry"), "selection.stage");
        selection.target = as_string(require(selection_json, "target", "selection entry"),
                                     "selection.target");
        selection.model_index =
            as_count(require(selection_json, "model", "selection entry"), "selection.model");
        if (selection.model_index < 1)
            throw ConfigError("selection.model indices are 1-based");
        selection.rationale = as_string(require(selection_json, "rationale", "selection entry"),
                                        "selection.rationale");
        const StageSpec& stage = find_stage(selection.stage);
        if (std::find(stage.targets.begin(), stage.targets.end(), selection.target) ==
            stage.targets.end())
            throw ConfigError("selection for '" + selection.target +
                              "' does not match a target of stage '" + selection.stage + "'");
        if (!selection_keys.emplace(selection.stage, selection.target).second)
            throw ConfigError("duplicate selection for target '" + selection.target +
                              "' in stage '" + selection.stage + "'");
        config.selections.push_back(std::move(selection));
    }

    if (resolved.contains("plan")) {
        const json& plan_json = resolved.at("plan");
        reject_unknown_keys(plan_json, {"passthrough", "models", "study_variables"},
                            "plan section");
        PlanConfig plan;
        plan.passthrough = as_names(require(plan_json, "passthrough", "plan section"),
                                    "plan.passthrough");
        for (const auto& name : plan.passthrough)
            if (!declared.contains(name))
                throw ConfigError("plan passthrough '" + name +
                                  "' is not a declared variable");
        std::unordered_set<std::string> plan_targets;
        for (const auto& model_json : require(plan_json, "models", "plan section")) {
            reject_unknown_keys(model_json, {"target", "stage", "direct_link"},
                                "plan model entry");
            PlanModelRef ref;
            ref.target = as_string(require(model_json, "target", "plan model entry"),
                                   "plan model target");
            ref.stage = as_string(require(model_json, "stage", "plan model entry"),
                                  "plan model stage");
            ref.direct_link = as_bool(require(model_json, "direct_link", "plan model entry"),
                                      "plan model direct_link");
            const StageSpec& stage = find_stage(ref.stage);
            if (std::find(stage.targets.begin(), stage.targets.end(), ref.target) ==
                stage.targets.end())
                throw ConfigError("plan model '" + ref.target +
                                  "' is not a target of stage '" + ref.stage + "'");
            if (!plan_targets.insert(ref.target).second)
                throw ConfigError("plan selects two models for target '" + ref.target + "'");
            plan.models.push_back(std::move(ref));
        }
        plan.study_variables = as_names(require(plan_json, "study_variables", "plan section"),
                                        "plan.study_variables");
        for (const auto& name : plan.study_variables)
            if (!declared.contains(name))
                throw ConfigError("plan study variable '" + name +
                                  "' is not a declared variable");
        config.plan = std::move(plan);
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    nlohmann::json raw;
    try {
        in >> raw;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " +
                          e.what());
    }
    const auto base = std::filesystem::absolute(path).parent_path();
    return parse_run_config(resolve_config_defaults(raw, base));
}

std::string config_hash(const nlohmann::json& resolved) {
    const std::string dump = resolved.dump();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char c : dump) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

Dataset load_configured_dataset(const RunConfig& config) {
    LoadOptions options;
    options.delimiter = config.dataset.delimiter;
    options.missing_token = config.dataset.missing_token;
    return load_dataset(config.dataset.path, config.dataset.variables, options);
}

}  // namespace epr
