#include <doctest.h>

#include <cmath>

#include "epr/error.hpp"
#include "epr/pipeline.hpp"
#include "epr/synthetic.hpp"
#include "support/test_data.hpp"

using namespace epr;
using testsupport::NA;
using testsupport::make_dataset;

namespace {

FittedModel model_over(const std::vector<std::string>& names,
                       std::vector<std::vector<double>> rows,
                       std::vector<double> coefficients, std::optional<double> bias) {
    return FittedModel(ExponentMatrix(std::move(rows), names), std::move(coefficients),
                       bias);
}

Dataset tiered_dataset(std::vector<std::vector<double>> rows) {
    std::vector<VariableSpec> schema{
        {"a", Tier::micro, "", ""}, {"b", Tier::micro, "", ""}, {"c", Tier::micro, "", ""},
        {"A", Tier::meso, "", ""},  {"B", Tier::meso, "", ""},  {"C", Tier::meso, "", ""},
    };
    return Dataset(std::move(schema), std::move(rows), "tiered");
}

GaConfig quick_ga(std::uint64_t seed) {
    GaConfig ga;
    ga.population_size = 50;
    ga.generations = 50;
    ga.seed = seed;
    return ga;
}

}  // namespace

TEST_CASE("run_stage searches each target on its own complete-case view") {
    // A follows 2/b + 0.1; C has a missing cell so its view is smaller.
    Rng rng(61);
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < 60; ++r) {
        const double a = rng.uniform(1000, 3000);
        const double b = rng.uniform(5, 50);
        const double c = rng.uniform(2, 9);
        const double A = 2.0 / b + 0.1 + 0.002 * rng.next_normal();
        const double C = 3.0 * c + 0.05 * rng.next_normal();
        rows.push_back({a, b, c, A, 1.0, r < 40 ? C : NA});
    }
    Dataset dataset = tiered_dataset(std::move(rows));

    StageSpec stage;
    stage.name = "meso_from_micro";
    stage.targets = {"A", "C"};
    stage.inputs = {"a", "b", "c"};
    stage.epr = EprConfig{};
    stage.ga = quick_ga(11);

    const StageResult result = run_stage(dataset, stage);
    REQUIRE(result.fronts.size() == 2);
    CHECK(result.failures.empty());

    bool recovered = false;
    for (const auto& entry : result.fronts[0].second.entries())
        if (entry.model.structure().rows() == std::vector<std::vector<double>>{{0, -1, 0}})
            recovered = true;
    CHECK(recovered);
    // C used only its 40 complete rows
    CHECK(result.fronts[1].second[0].model.fit().n_rows == 40);
}

TEST_CASE("run_stage reports partial failures and continues") {
    Rng rng(62);
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < 30; ++r) {
        const double b = rng.uniform(5, 50);
        rows.push_back({rng.uniform(1, 2), b, rng.uniform(2, 9),
                        2.0 / b + 0.1 + 0.01 * rng.next_normal(), NA, 1.0});
    }
    Dataset dataset = tiered_dataset(std::move(rows));

    StageSpec stage;
    stage.name = "partial";
    stage.targets = {"A", "B"};  // B is entirely missing
    stage.inputs = {"a", "b", "c"};
    stage.ga = quick_ga(12);

    const StageResult result = run_stage(dataset, stage);
    REQUIRE(result.fronts.size() == 1);
    CHECK(result.fronts[0].first == "A");
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].first == "B");
}

TEST_CASE("run_stage rejects overlapping targets and inputs") {
    Dataset dataset = tiered_dataset({{1, 2, 3, 4, 5, 6}});
    StageSpec stage;
    stage.name = "bad";
    stage.targets = {"A"};
    stage.inputs = {"a", "A"};
    CHECK_THROWS_AS(run_stage(dataset, stage), ConfigError);
}

TEST_CASE("hierarchy plan validation") {
    const Dataset dataset = tiered_dataset({{1, 2, 3, 4, 5, 6}, {2, 3, 4, 5, 6, 7}});

    SUBCASE("meso input without a model or passthrough flag is rejected") {
        std::vector<HierarchyPlan::Node> nodes;
        nodes.push_back({"C", model_over({"A", "b"}, {{1, 0}}, {2.0}, 0.0), false});
        CHECK_THROWS_WITH_AS(HierarchyPlan(std::move(nodes), {}, dataset),
                             doctest::Contains("'A'"), PlanError);
    }
    SUBCASE("the same input as passthrough is accepted") {
        std::vector<HierarchyPlan::Node> nodes;
        nodes.push_back({"C", model_over({"A", "b"}, {{1, 0}}, {2.0}, 0.0), false});
        const HierarchyPlan plan(std::move(nodes), {"A"}, dataset);
        CHECK(plan.required_inputs() == std::vector<std::string>{"A"});
    }
    SUBCASE("cyclic model dependencies are rejected") {
        std::vector<HierarchyPlan::Node> nodes;
        nodes.push_back({"A", model_over({"C"}, {{1}}, {1.0}, 0.0), false});
        nodes.push_back({"C", model_over({"A"}, {{1}}, {1.0}, 0.0), false});
        CHECK_THROWS_WITH_AS(HierarchyPlan(std::move(nodes), {}, dataset),
                             doctest::Contains("cycle"), PlanError);
    }
    SUBCASE("duplicate models for one target are rejected") {
        std::vector<HierarchyPlan::Node> nodes;
        nodes.push_back({"A", model_over({"b"}, {{1}}, {1.0}, 0.0), false});
        nodes.push_back({"A", model_over({"c"}, {{1}}, {1.0}, 0.0), false});
        CHECK_THROWS_AS(HierarchyPlan(std::move(nodes), {}, dataset), PlanError);
    }
    SUBCASE("direct links may not consume modeled variables") {
        std::vector<HierarchyPlan::Node> nodes;
        nodes.push_back({"A", model_over({"b"}, {{1}}, {1.0}, 0.0), false});
        nodes.push_back({"C", model_over({"A"}, {{1}}, {1.0}, 0.0), true});
        CHECK_THROWS_WITH_AS(HierarchyPlan(std::move(nodes), {}, dataset),
                             doctest::Contains("direct-link"), PlanError);
    }
    SUBCASE("passthrough of a modeled target is contradictory") {
        std::vector<HierarchyPlan::Node> nodes;
        nodes.push_back({"A", model_over({"b"}, {{1}}, {1.0}, 0.0), false});
        CHECK_THROWS_AS(HierarchyPlan(std::move(nodes), {"A"}, dataset), PlanError);
    }
}

TEST_CASE("chain_predict evaluates tiers in dependency order") {
    const Dataset dataset = tiered_dataset({{1, 2, 3, 4, 5, 6}});
    // A = 3.5562/b + 0.10262 ; C = 3186.7046/a + 0.86787 a sqrt(c) + 45.2672
    // and a macro-style ratio model on top of A.
    std::vector<HierarchyPlan::Node> nodes;
    nodes.push_back({"A",
                     model_over({"a", "b", "c"}, {{0, -1, 0}}, {3.5562}, 0.10262), false});
    nodes.push_back({"C",
                     model_over({"a", "b", "c"}, {{-1, 0, 0}, {1, 0, 0.5}},
                                {3186.7046, 0.86787}, 45.2672),
                     false});
    nodes.push_back(
        {"B", model_over({"A", "C"}, {{-1, 0.5}}, {0.2}, std::nullopt), false});
    const HierarchyPlan plan(std::move(nodes), {}, dataset);

    const std::map<std::string, double> record{{"a", 3000.0}, {"b", 40.0}, {"c", 8.0}};
    const auto predictions = chain_predict(plan, record);

    const double expected_A = 3.5562 / 40.0 + 0.10262;
    const double expected_C =
        3186.7046 / 3000.0 + 0.86787 * 3000.0 * std::sqrt(8.0) + 45.2672;
    const double expected_B = 0.2 * std::sqrt(expected_C) / expected_A;
    CHECK(predictions.at("A") == doctest::Approx(0.191525).epsilon(1e-10));
    CHECK(predictions.at("A") == doctest::Approx(expected_A).epsilon(1e-12));
    CHECK(predictions.at("C") == doctest::Approx(expected_C).epsilon(1e-12));
    CHECK(predictions.at("B") == doctest::Approx(expected_B).epsilon(1e-12));
}

TEST_CASE("chain_predict constant node ignores the record") {
    const Dataset dataset = tiered_dataset({{1, 2, 3, 4, 5, 6}});
    std::vector<HierarchyPlan::Node> nodes;
    nodes.push_back({"A", model_over({"b"}, {{-1}}, {2.0}, 0.1), false});
    nodes.push_back({"C", model_over({"A"}, {}, {}, 0.777), false});
    const HierarchyPlan plan(std::move(nodes), {}, dataset);
    for (const double b : {1.0, 10.0, 100.0})
        CHECK(chain_predict(plan, {{"b", b}}).at("C") == 0.777);
}

TEST_CASE("chain_predict names the missing variable") {
    const Dataset dataset = tiered_dataset({{1, 2, 3, 4, 5, 6}});
    std::vector<HierarchyPlan::Node> nodes;
    nodes.push_back({"C", model_over({"B", "b"}, {{0.5, 1}}, {1.0}, std::nullopt), false});
    const HierarchyPlan plan(std::move(nodes), {"B"}, dataset);
    CHECK_THROWS_WITH_AS(chain_predict(plan, {{"b", 2.0}}),
                         doctest::Contains("passthrough variable 'B'"), PlanError);
    CHECK_THROWS_WITH_AS(chain_predict(plan, {{"B", 2.0}}),
                         doctest::Contains("input variable 'b'"), PlanError);
}

TEST_CASE("chain_predict reports which model hit a domain error") {
    const Dataset dataset = tiered_dataset({{1, 2, 3, 4, 5, 6}});
    std::vector<HierarchyPlan::Node> nodes;
    nodes.push_back({"A", model_over({"b"}, {{1}}, {-1.0}, std::nullopt), false});
    nodes.push_back({"C", model_over({"A"}, {{0.5}}, {1.0}, std::nullopt), false});
    const HierarchyPlan plan(std::move(nodes), {}, dataset);
    // A = -b is negative, so sqrt(A) in the C model must fail, naming C.
    CHECK_THROWS_WITH_AS(chain_predict(plan, {{"b", 4.0}}),
                         doctest::Contains("model for 'C'"), DomainError);
}

TEST_CASE("correlation_study with exact generators has zero error") {
    synthetic::DemoOptions options;
    options.rows = 60;
    options.noise = 0.0;
    options.seed = 31;
    const Dataset dataset = synthetic::demo_dataset(options);
    const HierarchyPlan plan(synthetic::demo_generator_nodes(),
                             synthetic::demo_passthrough(), dataset);

    std::vector<std::string> variables;
    for (const auto& spec : dataset.variables()) variables.push_back(spec.name);
    const CorrelationComparison comparison = correlation_study(dataset, plan, variables);
    CHECK(comparison.mean_relative_error <= 1e-10);
    CHECK(comparison.relative_errors.maxCoeff() <= 1e-10);
    // both matrices were computed on exactly the same rows
    CHECK(comparison.experimental.n_pairs == comparison.theoretical.n_pairs);
    CHECK(comparison.experimental.n_pairs(0, 1) == 60);
}

TEST_CASE("correlation_study error grows with generator noise") {
    std::vector<double> means;
    for (const double noise : {0.0, 0.05, 0.1}) {
        double total = 0.0;
        for (const std::uint64_t seed : {1ull, 2ull, 3ull}) {
            synthetic::DemoOptions options;
            options.rows = 80;
            options.noise = noise;
            options.seed = seed;
            const Dataset dataset = synthetic::demo_dataset(options);
            const HierarchyPlan plan(synthetic::demo_generator_nodes(),
                                     synthetic::demo_passthrough(), dataset);
            std::vector<std::string> variables;
            for (const auto& spec : dataset.variables()) variables.push_back(spec.name);
            total += correlation_study(dataset, plan, variables).mean_relative_error;
        }
        means.push_back(total / 3.0);
    }
    CHECK(means[0] < means[1]);
    CHECK(means[1] < means[2]);
}

TEST_CASE("correlation_study requires plan inputs among the study variables") {
    synthetic::DemoOptions options;
    options.rows = 20;
    options.noise = 0.0;
    const Dataset dataset = synthetic::demo_dataset(options);
    const HierarchyPlan plan(synthetic::demo_generator_nodes(),
                             synthetic::demo_passthrough(), dataset);
    CHECK_THROWS_AS(correlation_study(dataset, plan, {"A", "C", "Ym"}), PlanError);
}
