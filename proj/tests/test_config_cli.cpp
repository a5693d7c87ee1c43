#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "epr/commands.hpp"
#include "epr/error.hpp"
#include "epr/synthetic.hpp"

using namespace epr;
using nlohmann::json;

namespace {

std::filesystem::path test_root() {
    const auto root = std::filesystem::temp_directory_path() / "epr_cli_tests";
    std::filesystem::create_directories(root);
    return root;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream content;
    content << in.rdbuf();
    return content.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::filesystem::path write_demo_csv(const std::filesystem::path& path) {
    synthetic::DemoOptions options;
    options.rows = 60;
    options.noise = 0.03;
    options.seed = 5;
    const Dataset dataset = synthetic::demo_dataset(options);
    std::ostringstream os;
    for (std::size_t c = 0; c < dataset.n_vars(); ++c)
        os << (c ? "," : "") << dataset.variables()[c].name;
    os << "\n";
    for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
        for (std::size_t c = 0; c < dataset.n_vars(); ++c) {
            if (c) os << ",";
            if (!dataset.is_missing(r, c)) os << format_number(dataset.value(r, c), 17);
        }
        os << "\n";
    }
    write_file(path, os.str());
    return path;
}

json demo_config_json(const std::filesystem::path& csv_path) {
    json variables = json::array();
    for (const auto& spec : synthetic::demo_schema())
        variables.push_back({{"name", spec.name},
                             {"tier", std::string(to_string(spec.tier))},
                             {"description", spec.description},
                             {"unit", spec.unit}});
    return json{
        {"dataset", {{"path", csv_path.string()}, {"variables", variables}}},
        {"epr", {{"max_terms", 2}}},
        {"ga", {{"population", 30}, {"generations", 30}, {"seed", 99}}},
        {"stages",
         json::array(
             {{{"name", "meso_from_micro"},
               {"targets", json::array({"A", "C"})},
               {"inputs", json::array({"a", "b", "c"})}},
              {{"name", "macro_from_meso"},
               {"targets", json::array({"Ym", "Ts", "Dm"})},
               {"inputs", json::array({"A", "B", "C"})}},
              {{"name", "macro_from_micro"},
               {"targets", json::array({"Sc"})},
               {"inputs", json::array({"a", "b", "c"})}}})},
        {"selections", json::array()},
        {"plan",
         {{"passthrough", json::array({"B"})},
          {"models", json::array({{{"target", "A"}, {"stage", "meso_from_micro"}},
                                  {{"target", "C"}, {"stage", "meso_from_micro"}},
                                  {{"target", "Ym"}, {"stage", "macro_from_meso"}},
                                  {{"target", "Ts"}, {"stage", "macro_from_meso"}},
                                  {{"target", "Dm"}, {"stage", "macro_from_meso"}},
                                  {{"target", "Sc"},
                                   {"stage", "macro_from_micro"},
                                   {"direct_link", true}}})}}},
    };
}

struct CliFixture {
    std::filesystem::path root;
    std::filesystem::path config_path;
    CommandOptions options;

    CliFixture() {
        static int counter = 0;
        root = test_root() / ("case_" + std::to_string(counter++));
        std::filesystem::remove_all(root);
        std::filesystem::create_directories(root);
        const auto csv = write_demo_csv(root / "demo.csv");
        config_path = root / "config.json";
        write_file(config_path, demo_config_json(csv).dump(2));
        options.config_path = config_path;
        options.out_root = root / "runs";
    }
};

}  // namespace

TEST_CASE("config defaults resolve and reparse to the same thing") {
    CliFixture fx;
    const RunConfig config = load_run_config(fx.config_path);
    CHECK(config.epr.max_terms == 2);
    CHECK(config.epr.exponents.size() == 5);  // default candidate set
    CHECK(config.epr.fit.bias);
    CHECK(config.ga.population_size == 30);
    CHECK(config.ga.seed == 99);
    CHECK(config.render_precision == 5);
    CHECK(config.stages.size() == 3);
    CHECK(config.plan.has_value());
    CHECK(config.plan->models.size() == 6);

    // resolving an already-resolved config is the identity
    const json again = resolve_config_defaults(config.effective, fx.root);
    CHECK(again == config.effective);
    CHECK(config_hash(again) == config_hash(config.effective));
}

TEST_CASE("config validation rejects bad sections") {
    CliFixture fx;
    json base = json::parse(read_file(fx.config_path));

    SUBCASE("exponent set must contain zero") {
        base["epr"]["exponents"] = {-1.0, 1.0};
        CHECK_THROWS_AS(parse_run_config(resolve_config_defaults(base, fx.root)),
                        ConfigError);
    }
    SUBCASE("seed is mandatory") {
        base["ga"].erase("seed");
        CHECK_THROWS_WITH_AS(parse_run_config(resolve_config_defaults(base, fx.root)),
                             doctest::Contains("seed"), ConfigError);
    }
    SUBCASE("unknown keys are rejected") {
        base["epr"]["typo_knob"] = 1;
        CHECK_THROWS_WITH_AS(parse_run_config(resolve_config_defaults(base, fx.root)),
                             doctest::Contains("typo_knob"), ConfigError);
    }
    SUBCASE("bad tier") {
        base["dataset"]["variables"][0]["tier"] = "nano";
        CHECK_THROWS_AS(parse_run_config(resolve_config_defaults(base, fx.root)),
                        ConfigError);
    }
    SUBCASE("stage referencing undeclared variables") {
        base["stages"][0]["targets"] = {"missing_var"};
        CHECK_THROWS_AS(parse_run_config(resolve_config_defaults(base, fx.root)),
                        ConfigError);
    }
    SUBCASE("selection for an unknown stage") {
        base["selections"] = json::array(
            {{{"stage", "nope"}, {"target", "A"}, {"model", 1}}});
        CHECK_THROWS_AS(parse_run_config(resolve_config_defaults(base, fx.root)),
                        ConfigError);
    }
    SUBCASE("selection indices are 1-based") {
        base["selections"] = json::array(
            {{{"stage", "meso_from_micro"}, {"target", "A"}, {"model", 0}}});
        CHECK_THROWS_AS(parse_run_config(resolve_config_defaults(base, fx.root)),
                        ConfigError);
    }
    SUBCASE("bad fit mode") {
        base["epr"]["mode"] = "sometimes_positive";
        CHECK_THROWS_AS(parse_run_config(resolve_config_defaults(base, fx.root)),
                        ConfigError);
    }
    SUBCASE("plan model outside its stage") {
        base["plan"]["models"][0]["target"] = "Ym";
        CHECK_THROWS_AS(parse_run_config(resolve_config_defaults(base, fx.root)),
                        ConfigError);
    }
}

TEST_CASE("per-stage overrides merge onto the global sections") {
    CliFixture fx;
    json base = json::parse(read_file(fx.config_path));
    base["stages"][0]["epr"] = {{"max_terms", 1}};
    base["stages"][0]["ga"] = {{"generations", 7}};
    const RunConfig config = parse_run_config(resolve_config_defaults(base, fx.root));
    CHECK(config.stages[0].epr.max_terms == 1);
    CHECK(config.stages[0].ga.generations == 7);
    CHECK(config.stages[0].ga.seed == 99);       // inherited
    CHECK(config.stages[1].epr.max_terms == 2);  // untouched
}

TEST_CASE("cmd_fit writes deterministic artifacts") {
    CliFixture fx;
    const auto run_dir = cmd_fit(fx.options, "A", {"a", "b", "c"});
    REQUIRE(std::filesystem::exists(run_dir / "config.json"));

    std::filesystem::path fit_dir;
    for (const auto& entry : std::filesystem::directory_iterator(run_dir))
        if (entry.is_directory() && entry.path().filename().string().rfind("fit_A", 0) == 0)
            fit_dir = entry.path();
    REQUIRE(!fit_dir.empty());
    REQUIRE(std::filesystem::exists(fit_dir / "front.csv"));
    REQUIRE(std::filesystem::exists(fit_dir / "front.txt"));
    REQUIRE(std::filesystem::exists(fit_dir / "r2_curve.csv"));

    const std::string front_first = read_file(fit_dir / "front.csv");
    const std::string text_first = read_file(fit_dir / "front.txt");
    CHECK(front_first.find("expression") != std::string::npos);
    CHECK(text_first.find("target: A") != std::string::npos);

    const auto run_dir_again = cmd_fit(fx.options, "A", {"a", "b", "c"});
    CHECK(run_dir_again == run_dir);
    CHECK(read_file(fit_dir / "front.csv") == front_first);
    CHECK(read_file(fit_dir / "front.txt") == text_first);
}

TEST_CASE("rerunning from the echoed config reproduces the run") {
    CliFixture fx;
    const auto run_dir = cmd_fit(fx.options, "Sc", {"a", "b", "c"});

    CommandOptions echoed = fx.options;
    echoed.config_path = run_dir / "config.json";
    const auto run_dir_again = cmd_fit(echoed, "Sc", {"a", "b", "c"});
    CHECK(run_dir_again == run_dir);  // same hash, same directory
}

TEST_CASE("seed override lands in a different run directory") {
    CliFixture fx;
    const auto base_dir = cmd_fit(fx.options, "A", {"a", "b"});
    CommandOptions with_seed = fx.options;
    with_seed.seed_override = 1234;
    const auto seeded_dir = cmd_fit(with_seed, "A", {"a", "b"});
    CHECK(base_dir != seeded_dir);
    CHECK(seeded_dir.filename().string().find("s1234") != std::string::npos);

    const RunConfig echoed = load_run_config(seeded_dir / "config.json");
    CHECK(echoed.ga.seed == 1234);
}

TEST_CASE("cmd_fit exhaustive toggle equals the genetic front here") {
    CliFixture fx;
    const auto find_fits = [](const std::filesystem::path& dir) {
        std::vector<std::filesystem::path> fits;
        for (const auto& entry : std::filesystem::directory_iterator(dir))
            if (entry.is_directory() &&
                entry.path().filename().string().rfind("fit_Sc", 0) == 0)
                fits.push_back(entry.path());
        std::sort(fits.begin(), fits.end());
        return fits;
    };

    const auto ga_dir = cmd_fit(fx.options, "Sc", {"b", "c"});
    const auto ga_fits = find_fits(ga_dir);
    REQUIRE(ga_fits.size() == 1);
    const std::string ga_front = read_file(ga_fits[0] / "front.csv");

    CommandOptions exhaustive = fx.options;
    exhaustive.exhaustive = true;
    const auto ex_dir = cmd_fit(exhaustive, "Sc", {"b", "c"});
    CHECK(ex_dir == ga_dir);  // same config and seed share the run directory
    const auto all_fits = find_fits(ex_dir);
    REQUIRE(all_fits.size() == 2);
    const auto& ex_fit = all_fits[0] == ga_fits[0] ? all_fits[1] : all_fits[0];
    CHECK(read_file(ex_fit / "front.csv") == ga_front);
}

TEST_CASE("cmd_stage writes per-target artifacts and a summary") {
    CliFixture fx;
    const auto run_dir = cmd_stage(fx.options, "meso_from_micro");
    const auto stage_dir = run_dir / "stage_meso_from_micro";
    REQUIRE(std::filesystem::exists(stage_dir / "summary.txt"));
    REQUIRE(std::filesystem::exists(stage_dir / "A" / "front.csv"));
    REQUIRE(std::filesystem::exists(stage_dir / "C" / "r2_curve.csv"));
    const std::string summary = read_file(stage_dir / "summary.txt");
    CHECK(summary.find("target A:") != std::string::npos);
    CHECK(summary.find("mean |rho|") != std::string::npos);
    CHECK_THROWS_AS(cmd_stage(fx.options, "no_such_stage"), ConfigError);
}

TEST_CASE("cmd_predict chains records through the plan") {
    CliFixture fx;
    write_file(fx.root / "records.csv",
               "a,b,c,B\n2000,30,5,40\n3000,20,7,55\n");
    const auto run_dir = cmd_predict(fx.options, fx.root / "records.csv");

    std::filesystem::path predict_dir;
    for (const auto& entry : std::filesystem::directory_iterator(run_dir))
        if (entry.is_directory() &&
            entry.path().filename().string().rfind("predict-", 0) == 0)
            predict_dir = entry.path();
    REQUIRE(!predict_dir.empty());
    const std::string predictions = read_file(predict_dir / "predictions.csv");
    CHECK(predictions.find("record,") == 0);
    CHECK(std::count(predictions.begin(), predictions.end(), '\n') == 3);
    for (const std::string target : {"A", "C", "Ym", "Ts", "Dm", "Sc"})
        CHECK(predictions.find(target) != std::string::npos);
}

TEST_CASE("cmd_predict names a missing passthrough variable") {
    CliFixture fx;
    write_file(fx.root / "records_missing.csv", "a,b,c\n2000,30,5\n");
    try {
        cmd_predict(fx.options, fx.root / "records_missing.csv");
        FAIL("expected PlanError");
    } catch (const PlanError& e) {
        const std::string message = e.what();
        CHECK(message.find("record 1") != std::string::npos);
        CHECK(message.find("'B'") != std::string::npos);
        CHECK(message.find("passthrough") != std::string::npos);
    }
}

TEST_CASE("cmd_correlate and cmd_report produce byte-identical reruns") {
    CliFixture fx;
    const auto run_dir = cmd_correlate(fx.options);
    const auto correlate_dir = run_dir / "correlate";
    for (const std::string name :
         {"experimental.csv", "theoretical.csv", "relative_error.csv", "comparison.txt"})
        REQUIRE(std::filesystem::exists(correlate_dir / name));
    const std::string comparison = read_file(correlate_dir / "comparison.txt");
    CHECK(comparison.find("mean relative error") != std::string::npos);

    const auto report_dir = cmd_report(fx.options);
    const std::string report = read_file(report_dir / "report.txt");
    CHECK(report.find("selected models") != std::string::npos);
    CHECK(report.find("correlation study") != std::string::npos);
    CHECK(report.find("stage meso_from_micro") != std::string::npos);

    const std::string front = read_file(report_dir / "stage_macro_from_meso" / "Ym" /
                                        "front.csv");
    cmd_report(fx.options);
    CHECK(read_file(report_dir / "report.txt") == report);
    CHECK(read_file(report_dir / "stage_macro_from_meso" / "Ym" / "front.csv") == front);
    CHECK(read_file(correlate_dir / "comparison.txt") == comparison);
}

TEST_CASE("cmd_correlate on noise-free generators reports a vanishing error") {
    // Noise-free table: exhaustive search finds the exact generator
    // structures, the knee walks to them, and the chained correlation
    // structure reproduces the measured one.
    static int counter = 1000;
    const auto root = test_root() / ("case_" + std::to_string(counter++));
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);

    synthetic::DemoOptions demo;
    demo.rows = 50;
    demo.noise = 0.0;
    demo.seed = 11;
    const Dataset dataset = synthetic::demo_dataset(demo);
    std::ostringstream os;
    for (std::size_t c = 0; c < dataset.n_vars(); ++c)
        os << (c ? "," : "") << dataset.variables()[c].name;
    os << "\n";
    for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
        for (std::size_t c = 0; c < dataset.n_vars(); ++c) {
            if (c) os << ",";
            os << format_number(dataset.value(r, c), 17);
        }
        os << "\n";
    }
    write_file(root / "clean.csv", os.str());

    json config = demo_config_json(root / "clean.csv");
    config["epr"]["knee_threshold"] = 1e-6;  // walk all the way to the exact fits
    write_file(root / "config.json", config.dump(2));

    CommandOptions options;
    options.config_path = root / "config.json";
    options.out_root = root / "runs";
    options.exhaustive = true;

    const auto run_dir = cmd_correlate(options);
    const std::string comparison = read_file(run_dir / "correlate" / "comparison.txt");
    const auto pos = comparison.find("mean relative error: ");
    REQUIRE(pos != std::string::npos);
    const double mean = std::strtod(comparison.c_str() + pos + 21, nullptr);
    CHECK(mean <= 1e-6);
}

TEST_CASE("explicit mutation rate survives parsing and the echo") {
    CliFixture fx;
    json base = json::parse(read_file(fx.config_path));
    base["ga"]["mutation_rate"] = 0.2;
    const RunConfig config = parse_run_config(resolve_config_defaults(base, fx.root));
    REQUIRE(config.ga.mutation_rate.has_value());
    CHECK(*config.ga.mutation_rate == 0.2);
    const json again = resolve_config_defaults(config.effective, fx.root);
    CHECK(again == config.effective);
}
