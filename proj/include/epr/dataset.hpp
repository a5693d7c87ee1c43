#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace epr {

/// Scale level of a variable in the hierarchical plan.
enum class Tier { micro, meso, macro };

Tier tier_from_string(std::string_view text);
std::string_view to_string(Tier tier);

/// Declared column: name, scale tier, free-text annotations. Units are
/// carried as annotations only; no unit algebra is performed.
struct VariableSpec {
    std::string name;
    Tier tier = Tier::micro;
    std::string description;
    std::string unit;
};

/// Immutable table of named real-valued columns with per-cell missing
/// values. Missing cells are stored as NaN; non-finite values in source
/// data are rejected at load, so the sentinel cannot collide with a
/// measurement. Safe to share across concurrent workers.
class Dataset {
public:
    Dataset(std::vector<VariableSpec> variables,
            std::vector<std::vector<double>> rows,
            std::string source);

    const std::vector<VariableSpec>& variables() const noexcept { return variables_; }
    std::size_t n_vars() const noexcept { return variables_.size(); }
    std::size_t n_rows() const noexcept { return rows_.size(); }
    const std::string& source() const noexcept { return source_; }

    /// Column index of a declared variable; throws DataError otherwise.
    std::size_t index_of(std::string_view name) const;
    bool has_variable(std::string_view name) const noexcept;

    double value(std::size_t row, std::size_t var) const { return rows_[row][var]; }
    bool is_missing(std::size_t row, std::size_t var) const {
        return std::isnan(rows_[row][var]);
    }

private:
    std::vector<VariableSpec> variables_;
    std::vector<std::vector<double>> rows_;
    std::string source_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Rows of a dataset on which `target` and every variable in `inputs` are
/// simultaneously present. row_indices is always the maximal such set.
struct CaseView {
    std::string target;
    std::vector<std::string> inputs;
    std::vector<std::size_t> row_indices;
};

struct LoadOptions {
    char delimiter = ',';
    /// Extra spelling for missing cells. Empty cells are always missing.
    std::string missing_token;
};

/// Reads a delimited text table with one header row. Header names must
/// match the declared schema exactly (same set); column order in the file
/// is authoritative for variable order.
Dataset load_dataset(const std::filesystem::path& path,
                     const std::vector<VariableSpec>& schema,
                     const LoadOptions& options = {});

/// Complete-case selection: keeps exactly the rows where the target and all
/// inputs are reported simultaneously. An empty result is an error, since
/// no regression is possible on it.
CaseView complete_cases(const Dataset& dataset, std::string_view target,
                        const std::vector<std::string>& inputs);

/// Declared variables of one tier, in declaration order.
std::vector<std::string> tier_variables(const Dataset& dataset, Tier tier);

/// Maximal set of row indices on which every listed variable is present.
std::vector<std::size_t> complete_rows(const Dataset& dataset,
                                       const std::vector<std::string>& variables);

}  // namespace epr
