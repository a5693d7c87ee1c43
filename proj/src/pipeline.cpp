#include "epr/pipeline.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "epr/error.hpp"

namespace epr {

StageResult run_stage(const Dataset& dataset, const StageSpec& stage) {
    for (const auto& target : stage.targets)
        if (std::find(stage.inputs.begin(), stage.inputs.end(), target) !=
            stage.inputs.end())
            throw ConfigError("stage '" + stage.name + "': target '" + target +
                              "' also appears among the inputs");

    StageResult result;
    for (const auto& target : stage.targets) {
        try {
            const CaseView view = complete_cases(dataset, target, stage.inputs);
            result.fronts.emplace_back(target, evolve(dataset, view, stage.epr, stage.ga));
        } catch (const Error& e) {
            result.failures.emplace_back(target, e.what());
        }
    }
    return result;
}

namespace {

/// Variables a model actually reads: nonzero exponent in some term.
std::vector<std::string> model_inputs(const FittedModel& model) {
    std::vector<std::string> used;
    const auto& structure = model.structure();
    for (std::size_t j = 0; j < structure.input_count(); ++j) {
        for (const auto& row : structure.rows())
            if (row[j] != 0.0) {
                used.push_back(structure.variable_names()[j]);
                break;
            }
    }
    return used;
}

}  // namespace

HierarchyPlan::HierarchyPlan(std::vector<Node> nodes, std::vector<std::string> passthrough,
                             const Dataset& dataset)
    : nodes_(std::move(nodes)), passthrough_(std::move(passthrough)) {
    std::unordered_map<std::string, std::size_t> modeled;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& target = nodes_[i].target;
        dataset.index_of(target);
        if (!modeled.emplace(target, i).second)
            throw PlanError("target '" + target + "' has more than one selected model");
    }
    std::unordered_set<std::string> passthrough_set;
    for (const auto& name : passthrough_) {
        dataset.index_of(name);
        if (modeled.contains(name))
            throw PlanError("variable '" + name +
                            "' is declared passthrough but also has a selected model");
        if (!passthrough_set.insert(name).second)
            throw PlanError("passthrough variable '" + name + "' listed twice");
    }

    // Every input must be predictable or supplied with the record.
    std::set<std::string> required;
    for (const auto& node : nodes_) {
        for (const auto& input : model_inputs(node.model)) {
            const bool is_modeled = modeled.contains(input);
            if (node.direct_link && is_modeled)
                throw PlanError("direct-link model for '" + node.target +
                                "' depends on modeled variable '" + input + "'");
            if (is_modeled) continue;
            const auto& spec = dataset.variables()[dataset.index_of(input)];
            if (spec.tier != Tier::micro && !passthrough_set.contains(input))
                throw PlanError("model for '" + node.target + "' needs '" + input +
                                "' (" + std::string(to_string(spec.tier)) +
                                "), which has no selected model and is not passthrough");
            required.insert(input);
        }
    }
    for (const auto& name : passthrough_) required.insert(name);
    required_inputs_.assign(required.begin(), required.end());

    // Kahn topological order over modeled-target dependencies.
    std::vector<std::vector<std::size_t>> feeds(nodes_.size());
    std::vector<std::size_t> pending(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        for (const auto& input : model_inputs(nodes_[i].model)) {
            const auto it = modeled.find(input);
            if (it != modeled.end()) {
                feeds[it->second].push_back(i);
                ++pending[i];
            }
        }
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (pending[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        const std::size_t i = ready.front();
        ready.erase(ready.begin());
        order_.push_back(i);
        for (const std::size_t j : feeds[i])
            if (--pending[j] == 0) ready.push_back(j);
    }
    if (order_.size() != nodes_.size())
        throw PlanError("selected models form a dependency cycle");
}

bool HierarchyPlan::models_target(std::string_view name) const {
    for (const auto& node : nodes_)
        if (node.target == name) return true;
    return false;
}

std::map<std::string, double> chain_predict(const HierarchyPlan& plan,
                                            const std::map<std::string, double>& record) {
    for (const auto& name : plan.required_inputs())
        if (!record.contains(name)) {
            const bool is_passthrough =
                std::find(plan.passthrough().begin(), plan.passthrough().end(), name) !=
                plan.passthrough().end();
            throw PlanError(std::string("record is missing ") +
                            (is_passthrough ? "passthrough" : "input") + " variable '" +
                            name + "'");
        }

    std::map<std::string, double> env = record;
    std::map<std::string, double> predictions;
    for (const std::size_t i : plan.evaluation_order()) {
        const auto& node = plan.nodes()[i];
        double value;
        try {
            value = node.model.evaluate(env);
        } catch (const DomainError& e) {
            throw DomainError("model for '" + node.target + "': " + e.what());
        }
        env[node.target] = value;
        predictions[node.target] = value;
    }
    return predictions;
}

CorrelationComparison correlation_study(const Dataset& dataset, const HierarchyPlan& plan,
                                        const std::vector<std::string>& variables) {
    for (const auto& required : plan.required_inputs())
        if (std::find(variables.begin(), variables.end(), required) == variables.end())
            throw PlanError("study variable list must include plan input '" + required + "'");

    const std::vector<std::size_t> rows = complete_rows(dataset, variables);
    if (rows.size() < 2)
        throw DataError("fewer than 2 rows are complete over the study variables");

    const CorrelationMatrix experimental = correlation_matrix(dataset, variables, rows);

    std::vector<VariableSpec> specs;
    std::vector<std::size_t> cols;
    for (const auto& name : variables) {
        const std::size_t c = dataset.index_of(name);
        specs.push_back(dataset.variables()[c]);
        cols.push_back(c);
    }

    std::vector<std::vector<double>> theo_rows;
    theo_rows.reserve(rows.size());
    for (const std::size_t r : rows) {
        std::map<std::string, double> record;
        for (std::size_t i = 0; i < variables.size(); ++i)
            if (!plan.models_target(variables[i]))
                record[variables[i]] = dataset.value(r, cols[i]);
        const auto predictions = chain_predict(plan, record);

        std::vector<double> row(variables.size());
        for (std::size_t i = 0; i < variables.size(); ++i) {
            const auto it = predictions.find(variables[i]);
            row[i] = it != predictions.end() ? it->second : dataset.value(r, cols[i]);
        }
        theo_rows.push_back(std::move(row));
    }

    const Dataset theoretical_data(specs, std::move(theo_rows),
                                   dataset.source() + " (chained predictions)");
    const CorrelationMatrix theoretical = correlation_matrix(theoretical_data, variables);
    return compare_correlations(experimental, theoretical);
}

}  // namespace epr
