#include "epr/synthetic.hpp"

#include <limits>

#include "epr/error.hpp"
#include "epr/rng.hpp"

namespace epr::synthetic {

namespace {

const std::vector<std::string> kMicro{"a", "b", "c"};
const std::vector<std::string> kMeso{"A", "B", "C"};

FittedModel make_model(const std::vector<std::string>& variables,
                       std::vector<std::vector<double>> rows,
                       std::vector<double> coefficients, std::optional<double> bias) {
    return FittedModel(ExponentMatrix(std::move(rows), variables),
                       std::move(coefficients), bias);
}

}  // namespace

std::vector<VariableSpec> demo_schema() {
    return {
        {"a", Tier::micro, "micro-scale size property", "count"},
        {"b", Tier::micro, "micro-scale size property", "count"},
        {"c", Tier::micro, "micro-scale ordering property", "count"},
        {"A", Tier::meso, "meso-scale fraction", "-"},
        {"B", Tier::meso, "meso-scale orientation measure", "-"},
        {"C", Tier::meso, "meso-scale stability temperature", "degC"},
        {"Ym", Tier::macro, "macro-scale stiffness", "GPa"},
        {"Ts", Tier::macro, "macro-scale strength", "GPa"},
        {"Dm", Tier::macro, "macro-scale diameter", "um"},
        {"Sc", Tier::macro, "macro-scale contraction ratio", "-"},
    };
}

std::vector<HierarchyPlan::Node> demo_generator_nodes() {
    std::vector<HierarchyPlan::Node> nodes;
    // Meso from micro.
    nodes.push_back({"A", make_model(kMicro, {{0, -1, 0}}, {3.2}, 0.12), false});
    nodes.push_back(
        {"C", make_model(kMicro, {{-1, 0, 0}, {1, 0, 0.5}}, {150000.0, 0.9}, 40.0), false});
    // Macro from meso (B is measured, not modeled).
    nodes.push_back({"Ym", make_model(kMeso, {{-1, 0.5, 0}, {1, 0, 0}}, {0.1, 25.0},
                                      std::nullopt),
                     false});
    nodes.push_back({"Ts", make_model(kMeso, {{-1, 0.5, 0}, {1, 0, 1}}, {0.014, 0.012},
                                      std::nullopt),
                     false});
    nodes.push_back({"Dm", make_model(kMeso, {{0.5, -1, 1}}, {0.8}, std::nullopt), false});
    // Macro straight from micro.
    nodes.push_back({"Sc", make_model(kMicro, {{0, 1, -1}}, {0.06}, 0.005), true});
    return nodes;
}

std::vector<std::string> demo_passthrough() { return {"B"}; }

Dataset demo_dataset(const DemoOptions& options) {
    if (options.rows < 2) throw ConfigError("demo dataset needs at least 2 rows");
    if (!(options.noise >= 0.0 && options.noise <= 0.2))
        throw ConfigError("demo noise must lie in [0, 0.2]");
    if (!(options.missing_fraction >= 0.0 && options.missing_fraction < 1.0))
        throw ConfigError("demo missing fraction must lie in [0, 1)");

    const auto nodes = demo_generator_nodes();
    Rng rng(derive_seed(options.seed, 0x6d656d6f, 0));

    const auto noisy = [&](double value) {
        if (options.noise == 0.0) return value;
        double scaled;
        do {
            scaled = value * (1.0 + options.noise * rng.next_normal());
        } while (scaled <= 0.0);
        return scaled;
    };

    std::vector<std::vector<double>> rows;
    rows.reserve(options.rows);
    for (std::size_t r = 0; r < options.rows; ++r) {
        std::map<std::string, double> record{
            {"a", rng.uniform(1500.0, 4500.0)},
            {"b", rng.uniform(10.0, 60.0)},
            {"c", rng.uniform(3.0, 10.0)},
            {"B", rng.uniform(20.0, 70.0)},
        };
        // Evaluate tier by tier so each level sees the measured (noisy)
        // values of the one below, the way real columns would.
        for (const auto& node : nodes) record[node.target] = noisy(node.model.evaluate(record));

        rows.push_back({record["a"], record["b"], record["c"], record["A"], record["B"],
                        record["C"], record["Ym"], record["Ts"], record["Dm"],
                        record["Sc"]});
    }

    if (options.missing_fraction > 0.0) {
        for (auto& row : rows)
            for (std::size_t c = 3; c < row.size(); ++c)
                if (rng.bernoulli(options.missing_fraction))
                    row[c] = std::numeric_limits<double>::quiet_NaN();
    }

    return Dataset(demo_schema(), std::move(rows), "demo generator");
}

}  // namespace epr::synthetic
