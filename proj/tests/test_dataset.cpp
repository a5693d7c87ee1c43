#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "epr/dataset.hpp"
#include "epr/error.hpp"
#include "epr/rng.hpp"
#include "support/test_data.hpp"

using namespace epr;
using testsupport::NA;
using testsupport::make_dataset;
using testsupport::specs;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("load_dataset parses values and missing cells") {
    const auto path = write_temp("epr_load_basic.csv", "a,b,c\n10,40,8\n12,,9\n");
    const Dataset dataset = load_dataset(path, specs({"a", "b", "c"}));
    CHECK(dataset.n_rows() == 2);
    CHECK(dataset.value(0, 1) == 40.0);
    CHECK(dataset.is_missing(1, 1));
    CHECK(dataset.value(1, 2) == 9.0);
}

TEST_CASE("load_dataset rejects duplicate headers") {
    const auto path = write_temp("epr_load_dup.csv", "a,a,c\n1,2,3\n");
    CHECK_THROWS_WITH_AS(load_dataset(path, specs({"a", "c"})),
                         doctest::Contains("duplicate header column 'a'"), DataError);
}

TEST_CASE("load_dataset names the cell it cannot parse") {
    const auto path = write_temp("epr_load_parse.csv", "a,b\nabc,2\n");
    try {
        load_dataset(path, specs({"a", "b"}));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string message = e.what();
        CHECK(message.find("row 1") != std::string::npos);
        CHECK(message.find("'a'") != std::string::npos);
        CHECK(message.find("abc") != std::string::npos);
    }
}

TEST_CASE("load_dataset rejects unknown and absent columns") {
    const auto unknown = write_temp("epr_load_unknown.csv", "a,x\n1,2\n");
    CHECK_THROWS_WITH_AS(load_dataset(unknown, specs({"a", "b"})),
                         doctest::Contains("unknown column 'x'"), DataError);
    const auto absent = write_temp("epr_load_absent.csv", "a\n1\n");
    CHECK_THROWS_WITH_AS(load_dataset(absent, specs({"a", "b"})),
                         doctest::Contains("'b' declared in the schema"), DataError);
}

TEST_CASE("load_dataset rejects non-finite values") {
    const auto path = write_temp("epr_load_inf.csv", "a,b\ninf,2\n");
    CHECK_THROWS_AS(load_dataset(path, specs({"a", "b"})), DataError);
    const auto nan_path = write_temp("epr_load_nan.csv", "a,b\nnan,2\n");
    CHECK_THROWS_AS(load_dataset(nan_path, specs({"a", "b"})), DataError);
}

TEST_CASE("load_dataset honors delimiter and missing token") {
    const auto path = write_temp("epr_load_semi.csv", "a;b\n1;NA\n2;5\n");
    LoadOptions options;
    options.delimiter = ';';
    options.missing_token = "NA";
    const Dataset dataset = load_dataset(path, specs({"a", "b"}), options);
    CHECK(dataset.is_missing(0, 1));
    CHECK(dataset.value(1, 1) == 5.0);
}

TEST_CASE("file column order is authoritative for variable order") {
    const auto path = write_temp("epr_load_order.csv", "b,a\n1,2\n");
    const Dataset dataset = load_dataset(path, specs({"a", "b"}));
    CHECK(dataset.variables()[0].name == "b");
    CHECK(dataset.index_of("a") == 1);
}

TEST_CASE("dataset invariants") {
    CHECK_THROWS_AS(Dataset(specs({"a"}), {}, "t"), DataError);
    CHECK_THROWS_AS(Dataset({}, {{1.0}}, "t"), DataError);
    CHECK_THROWS_AS(Dataset(specs({"a", "a"}), {{1.0, 2.0}}, "t"), DataError);
    CHECK_THROWS_AS(Dataset(specs({"a", "b"}), {{1.0}}, "t"), DataError);
}

TEST_CASE("complete_cases keeps exactly the simultaneous rows") {
    const Dataset dataset = make_dataset({"a", "b", "c"}, {{1, 2, 3}, {1, NA, 3}});

    SUBCASE("target c, inputs a and b") {
        const CaseView view = complete_cases(dataset, "c", {"a", "b"});
        CHECK(view.row_indices == std::vector<std::size_t>{0});
    }
    SUBCASE("target c, input a only") {
        const CaseView view = complete_cases(dataset, "c", {"a"});
        CHECK(view.row_indices == std::vector<std::size_t>{0, 1});
    }
    SUBCASE("empty view is an error") {
        const Dataset all_missing = make_dataset({"b", "c"}, {{NA, 1}, {NA, 2}});
        CHECK_THROWS_AS(complete_cases(all_missing, "c", {"b"}), DataError);
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(complete_cases(dataset, "c", {}), DataError);
        CHECK_THROWS_AS(complete_cases(dataset, "c", {"c"}), DataError);
        CHECK_THROWS_AS(complete_cases(dataset, "c", {"a", "a"}), DataError);
        CHECK_THROWS_AS(complete_cases(dataset, "z", {"a"}), DataError);
    }
}

TEST_CASE("tier_variables returns declaration order per tier") {
    std::vector<VariableSpec> schema;
    for (const std::string name : {"a", "b", "c"})
        schema.push_back({name, Tier::micro, "", ""});
    for (const std::string name : {"A", "B", "C"})
        schema.push_back({name, Tier::meso, "", ""});
    for (const std::string name :
         {"\xF0\x9D\x94\xB8", "\xF0\x9D\x94\xB9", "\xE2\x84\x82", "\xF0\x9D\x94\xBB"})
        schema.push_back({name, Tier::macro, "", ""});
    const Dataset dataset(schema, {std::vector<double>(10, 1.0)}, "tiers");

    CHECK(tier_variables(dataset, Tier::micro) == std::vector<std::string>{"a", "b", "c"});
    CHECK(tier_variables(dataset, Tier::macro) ==
          std::vector<std::string>{"\xF0\x9D\x94\xB8", "\xF0\x9D\x94\xB9", "\xE2\x84\x82",
                                   "\xF0\x9D\x94\xBB"});

    const Dataset no_meso(specs({"a", "b"}), {{1.0, 2.0}}, "no meso");
    CHECK(tier_variables(no_meso, Tier::meso).empty());
}

TEST_CASE("complete_cases is monotone in the input set") {
    // Randomized missing patterns: adding an input never enlarges the view,
    // and a subset of inputs always yields a superset of rows.
    Rng rng(20240811);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<double>> rows;
        for (int r = 0; r < 30; ++r) {
            std::vector<double> row;
            for (int c = 0; c < 4; ++c)
                row.push_back(rng.bernoulli(0.3) ? NA : rng.uniform(0.0, 1.0));
            rows.push_back(std::move(row));
        }
        rows.push_back({1.0, 2.0, 3.0, 4.0});  // one complete row, so no view errors
        const Dataset dataset = make_dataset({"x1", "x2", "x3", "y"}, std::move(rows));

        const auto narrow = complete_cases(dataset, "y", {"x1"});
        const auto wide = complete_cases(dataset, "y", {"x1", "x2", "x3"});
        CHECK(wide.row_indices.size() <= narrow.row_indices.size());
        for (const auto r : wide.row_indices)
            CHECK(std::find(narrow.row_indices.begin(), narrow.row_indices.end(), r) !=
                  narrow.row_indices.end());
    }
}

TEST_CASE("no missing cells: every view covers all rows") {
    Rng rng(7);
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < 12; ++r)
        rows.push_back({rng.next_unit(), rng.next_unit(), rng.next_unit()});
    const Dataset dataset = make_dataset({"p", "q", "r"}, std::move(rows));
    for (const std::string target : {"p", "q", "r"}) {
        std::vector<std::string> inputs;
        for (const std::string name : {"p", "q", "r"})
            if (name != target) inputs.push_back(name);
        CHECK(complete_cases(dataset, target, inputs).row_indices.size() == 12);
    }
}

TEST_CASE("complete_rows finds the maximal all-present set") {
    const Dataset dataset = make_dataset({"a", "b"}, {{1, 1}, {NA, 1}, {1, NA}, {2, 2}});
    CHECK(complete_rows(dataset, {"a", "b"}) == std::vector<std::size_t>{0, 3});
    CHECK(complete_rows(dataset, {"a"}) == std::vector<std::size_t>{0, 2, 3});
}
