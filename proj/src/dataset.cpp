#include "epr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "epr/error.hpp"

namespace epr {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
    const char* ws = " \t\r\n";
    const auto begin = s.find_first_not_of(ws);
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(ws);
    return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

}  // namespace

Tier tier_from_string(std::string_view text) {
    if (text == "micro") return Tier::micro;
    if (text == "meso") return Tier::meso;
    if (text == "macro") return Tier::macro;
    throw ConfigError("unknown tier '" + std::string(text) +
                      "' (expected micro, meso or macro)");
}

std::string_view to_string(Tier tier) {
    switch (tier) {
        case Tier::micro: return "micro";
        case Tier::meso: return "meso";
        case Tier::macro: return "macro";
    }
    return "?";
}

Dataset::Dataset(std::vector<VariableSpec> variables,
                 std::vector<std::vector<double>> rows, std::string source)
    : variables_(std::move(variables)),
      rows_(std::move(rows)),
      source_(std::move(source)) {
    if (variables_.empty()) throw DataError("dataset declares no variables");
    if (rows_.empty())
        throw DataError("dataset has no rows (source: " + source_ + ")");
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i].name.empty()) throw DataError("empty variable name");
        if (!index_.emplace(variables_[i].name, i).second)
            throw DataError("duplicate variable name '" + variables_[i].name + "'");
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].size() != variables_.size())
            throw DataError("row " + std::to_string(r + 1) + " has " +
                            std::to_string(rows_[r].size()) + " entries, expected " +
                            std::to_string(variables_.size()));
        for (std::size_t c = 0; c < rows_[r].size(); ++c)
            if (std::isinf(rows_[r][c]))
                throw DataError("row " + std::to_string(r + 1) + ", column '" +
                                variables_[c].name + "': non-finite value");
    }
}

std::size_t Dataset::index_of(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end())
        throw DataError("variable '" + std::string(name) + "' is not declared");
    return it->second;
}

bool Dataset::has_variable(std::string_view name) const noexcept {
    return index_.contains(std::string(name));
}

Dataset load_dataset(const std::filesystem::path& path,
                     const std::vector<VariableSpec>& schema,
                     const LoadOptions& options) {
    if (schema.empty()) throw ConfigError("dataset schema declares no variables");
    std::unordered_map<std::string, const VariableSpec*> by_name;
    for (const auto& spec : schema)
        if (!by_name.emplace(spec.name, &spec).second)
            throw ConfigError("schema declares variable '" + spec.name + "' twice");

    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line))
        throw DataError("dataset file '" + path.string() + "' is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
        line.erase(0, 3);  // UTF-8 BOM

    std::vector<std::string> header;
    for (auto& cell : split_line(line, options.delimiter)) header.push_back(trim(cell));

    std::unordered_set<std::string> seen;
    std::vector<VariableSpec> variables;
    for (const auto& name : header) {
        if (name.empty()) throw DataError("empty column name in header");
        if (!seen.insert(name).second)
            throw DataError("duplicate header column '" + name + "'");
        const auto it = by_name.find(name);
        if (it == by_name.end())
            throw DataError("unknown column '" + name + "' (not in the declared schema)");
        variables.push_back(*it->second);
    }
    for (const auto& spec : schema)
        if (!seen.contains(spec.name))
            throw DataError("column '" + spec.name +
                            "' declared in the schema is missing from the file");

    std::vector<std::vector<double>> rows;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row_no;
        const auto cells = split_line(line, options.delimiter);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        std::vector<double> row(cells.size(), kMissing);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string cell = trim(cells[c]);
            if (cell.empty() || cell == options.missing_token) continue;
            double value = 0.0;
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            const auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc() || ptr != last)
                throw DataError("row " + std::to_string(row_no) + ", column '" +
                                header[c] + "': cannot parse '" + cell + "' as a number");
            if (!std::isfinite(value))
                throw DataError("row " + std::to_string(row_no) + ", column '" +
                                header[c] + "': non-finite value '" + cell + "'");
            row[c] = value;
        }
        rows.push_back(std::move(row));
    }
    return Dataset(std::move(variables), std::move(rows), path.string());
}

CaseView complete_cases(const Dataset& dataset, std::string_view target,
                        const std::vector<std::string>& inputs) {
    if (inputs.empty())
        throw DataError("complete_cases requires at least one input variable");
    const std::size_t target_col = dataset.index_of(target);
    std::vector<std::size_t> input_cols;
    std::unordered_set<std::string> seen;
    for (const auto& name : inputs) {
        if (name == target)
            throw DataError("target '" + std::string(target) + "' cannot also be an input");
        if (!seen.insert(name).second)
            throw DataError("input variable '" + name + "' listed twice");
        input_cols.push_back(dataset.index_of(name));
    }

    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
        if (dataset.is_missing(r, target_col)) continue;
        bool complete = true;
        for (const auto c : input_cols)
            if (dataset.is_missing(r, c)) {
                complete = false;
                break;
            }
        if (complete) rows.push_back(r);
    }
    if (rows.empty()) {
        std::ostringstream os;
        os << "no rows where target '" << target << "' and inputs (";
        for (std::size_t i = 0; i < inputs.size(); ++i)
            os << (i ? ", " : "") << inputs[i];
        os << ") are present simultaneously";
        throw DataError(os.str());
    }
    return CaseView{std::string(target), inputs, std::move(rows)};
}

std::vector<std::string> tier_variables(const Dataset& dataset, Tier tier) {
    std::vector<std::string> names;
    for (const auto& spec : dataset.variables())
        if (spec.tier == tier) names.push_back(spec.name);
    return names;
}

std::vector<std::size_t> complete_rows(const Dataset& dataset,
                                       const std::vector<std::string>& variables) {
    std::vector<std::size_t> cols;
    for (const auto& name : variables) cols.push_back(dataset.index_of(name));
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
        bool complete = true;
        for (const auto c : cols)
            if (dataset.is_missing(r, c)) {
                complete = false;
                break;
            }
        if (complete) rows.push_back(r);
    }
    return rows;
}

}  // namespace epr
