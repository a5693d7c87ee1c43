#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "epr/evolution.hpp"
#include "epr/metrics.hpp"

namespace epr {

/// One staged regression: search each target from the same input list.
struct StageSpec {
    std::string name;
    std::vector<std::string> targets;
    std::vector<std::string> inputs;
    EprConfig epr;
    GaConfig ga;
};

/// Fronts per target in stage order. A target whose view is empty (or whose
/// search fails) lands in `failures`; the stage continues for the rest.
struct StageResult {
    std::vector<std::pair<std::string, ParetoFront>> fronts;
    std::vector<std::pair<std::string, std::string>> failures;
};

StageResult run_stage(const Dataset& dataset, const StageSpec& stage);

/// Which model of which front a user picked, and why. Indices are 1-based,
/// matching the rendered front listing.
struct ModelSelection {
    std::string stage;
    std::string target;
    std::size_t model_index = 0;
    std::string rationale;
};

/// Selected models chained across tiers. Validated at construction: the
/// dependency graph over modeled targets must be acyclic, and every input
/// that no model predicts must be a micro-tier variable or declared
/// passthrough. Direct-link models must draw all inputs straight from the
/// record, bypassing intermediate predictions.
class HierarchyPlan {
public:
    struct Node {
        std::string target;
        FittedModel model;
        bool direct_link = false;
    };

    HierarchyPlan(std::vector<Node> nodes, std::vector<std::string> passthrough,
                  const Dataset& dataset);

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<std::string>& passthrough() const noexcept { return passthrough_; }
    /// Node indices in dependency order.
    const std::vector<std::size_t>& evaluation_order() const noexcept { return order_; }
    /// Variables a prediction record must supply, sorted.
    const std::vector<std::string>& required_inputs() const noexcept {
        return required_inputs_;
    }
    bool models_target(std::string_view name) const;

private:
    std::vector<Node> nodes_;
    std::vector<std::string> passthrough_;
    std::vector<std::size_t> order_;
    std::vector<std::string> required_inputs_;
};

/// Evaluates the plan's models in dependency order starting from the given
/// record; lower-tier predictions feed higher-tier models. Returns the
/// predicted value of every modeled target.
std::map<std::string, double> chain_predict(const HierarchyPlan& plan,
                                            const std::map<std::string, double>& record);

/// Restricts the dataset to rows complete over `variables`, computes the
/// experimental correlation matrix there, rebuilds the same columns from
/// chained predictions (copying non-modeled variables through), and
/// compares the two correlation structures. Both matrices use exactly the
/// same row subset.
CorrelationComparison correlation_study(const Dataset& dataset, const HierarchyPlan& plan,
                                        const std::vector<std::string>& variables);

}  // namespace epr
