#include "epr/expression.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "epr/error.hpp"

namespace epr {

CandidateExponents::CandidateExponents(std::vector<double> values)
    : values_(std::move(values)) {
    if (values_.empty()) throw ConfigError("candidate exponent set is empty");
    for (const double v : values_)
        if (!std::isfinite(v)) throw ConfigError("candidate exponents must be finite");
    std::sort(values_.begin(), values_.end());
    if (std::adjacent_find(values_.begin(), values_.end()) != values_.end())
        throw ConfigError("candidate exponents must be distinct");
    if (!contains(0.0))
        throw ConfigError(
            "candidate exponents must include 0 so the search can drop a variable "
            "from a term");
}

bool CandidateExponents::contains(double value) const {
    const auto it = std::lower_bound(values_.begin(), values_.end(), value);
    return it != values_.end() && *it == value;
}

std::size_t CandidateExponents::index_of(double value) const {
    const auto it = std::lower_bound(values_.begin(), values_.end(), value);
    if (it == values_.end() || *it != value)
        throw ConfigError("exponent " + format_number(value, 17) +
                          " is not in the candidate set");
    return static_cast<std::size_t>(it - values_.begin());
}

ExponentMatrix::ExponentMatrix(std::vector<std::vector<double>> exponents,
                               std::vector<std::string> variable_names)
    : rows_(std::move(exponents)), variable_names_(std::move(variable_names)) {
    if (variable_names_.empty())
        throw std::invalid_argument("exponent matrix needs at least one variable");
    for (const auto& row : rows_) {
        if (row.size() != variable_names_.size())
            throw std::invalid_argument("exponent row width does not match variable count");
        for (const double e : row)
            if (!std::isfinite(e))
                throw std::invalid_argument("exponent entries must be finite");
    }
}

std::size_t ExponentMatrix::distinct_inputs_used() const {
    std::size_t used = 0;
    for (std::size_t j = 0; j < variable_names_.size(); ++j) {
        for (const auto& row : rows_)
            if (row[j] != 0.0) {
                ++used;
                break;
            }
    }
    return used;
}

bool ExponentMatrix::conforms_to(const CandidateExponents& exponents) const {
    for (const auto& row : rows_)
        for (const double e : row)
            if (!exponents.contains(e)) return false;
    return true;
}

ExponentMatrix canonicalize(const ExponentMatrix& structure) {
    std::vector<std::vector<double>> rows;
    for (const auto& row : structure.rows()) {
        const bool all_zero =
            std::all_of(row.begin(), row.end(), [](double e) { return e == 0.0; });
        if (!all_zero) rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return ExponentMatrix(std::move(rows), structure.variable_names());
}

double term_value(std::span<const double> values, std::span<const double> exponent_row) {
    double product = 1.0;
    for (std::size_t j = 0; j < exponent_row.size(); ++j) {
        const double e = exponent_row[j];
        if (e == 0.0) continue;
        const double v = values[j];
        if (v <= 0.0 && (e < 0.0 || e != std::floor(e)))
            throw DomainError("value " + format_number(v, 6) +
                              " cannot be raised to exponent " + format_number(e, 6));
        product *= std::pow(v, e);
    }
    return product;
}

double term_value(const std::map<std::string, double>& record,
                  const std::vector<double>& exponent_row,
                  const std::vector<std::string>& variable_names) {
    double product = 1.0;
    for (std::size_t j = 0; j < exponent_row.size(); ++j) {
        const double e = exponent_row[j];
        if (e == 0.0) continue;  // variable absent from the term
        const auto it = record.find(variable_names[j]);
        if (it == record.end())
            throw DomainError("variable '" + variable_names[j] + "' has no value");
        const double v = it->second;
        if (v <= 0.0 && (e < 0.0 || e != std::floor(e)))
            throw DomainError("variable '" + variable_names[j] + "' = " +
                              format_number(v, 6) + " cannot be raised to exponent " +
                              format_number(e, 6));
        product *= std::pow(v, e);
    }
    return product;
}

Eigen::MatrixXd design_matrix(const CaseView& view, const Dataset& dataset,
                              const ExponentMatrix& structure, bool bias) {
    const auto& names = structure.variable_names();
    std::vector<std::size_t> cols;
    for (const auto& name : names) cols.push_back(dataset.index_of(name));

    const std::size_t n = view.row_indices.size();
    const std::size_t m = structure.term_count();
    Eigen::MatrixXd design(n, m + (bias ? 1 : 0));
    std::vector<double> values(names.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = view.row_indices[i];
        for (std::size_t j = 0; j < cols.size(); ++j) values[j] = dataset.value(r, cols[j]);
        for (std::size_t t = 0; t < m; ++t) {
            try {
                design(i, t) = term_value(values, structure.row(t));
            } catch (const DomainError& e) {
                throw DomainError("term " + std::to_string(t + 1) + " on data row " +
                                  std::to_string(r + 1) + ": " + e.what());
            }
        }
        if (bias) design(i, m) = 1.0;
    }
    return design;
}

FittedModel::FittedModel(ExponentMatrix structure, std::vector<double> coefficients,
                         std::optional<double> bias, FitInfo fit)
    : structure_(std::move(structure)),
      coefficients_(std::move(coefficients)),
      bias_(bias),
      fit_(std::move(fit)) {
    if (coefficients_.size() != structure_.term_count())
        throw std::invalid_argument("coefficient count does not match term count");
}

double FittedModel::evaluate(const std::map<std::string, double>& record) const {
    double sum = bias_.value_or(0.0);
    for (std::size_t t = 0; t < coefficients_.size(); ++t)
        sum += coefficients_[t] *
               term_value(record, structure_.row(t), structure_.variable_names());
    return sum;
}

double FittedModel::evaluate(std::span<const double> values) const {
    double sum = bias_.value_or(0.0);
    for (std::size_t t = 0; t < coefficients_.size(); ++t)
        sum += coefficients_[t] * term_value(values, structure_.row(t));
    return sum;
}

double evaluate(const FittedModel& model, const std::map<std::string, double>& record) {
    return model.evaluate(record);
}

std::string format_number(double value, int precision) {
    char buf[64];
    if (precision >= 17) {
        for (int p = 15; p <= 17; ++p) {
            std::snprintf(buf, sizeof buf, "%.*g", p, value);
            if (std::strtod(buf, nullptr) == value) return buf;
        }
        return buf;
    }
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    return buf;
}

namespace {

std::string format_exponent(double e) { return format_number(e, 17); }

/// Body of one term, without its coefficient: numerator factors, then the
/// denominator collecting negative exponents.
std::string term_body(const std::vector<double>& row,
                      const std::vector<std::string>& names, bool leading_dot) {
    std::string num, den;
    int den_count = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        const double e = row[j];
        if (e == 0.0) continue;
        const double mag = std::abs(e);
        std::string piece = names[j];
        if (mag != 1.0) piece += "^" + format_exponent(mag);
        if (e > 0.0) {
            if (!num.empty()) num += "·";
            num += piece;
        } else {
            if (!den.empty()) den += "·";
            den += piece;
            ++den_count;
        }
    }
    std::string body;
    if (!num.empty()) body += (leading_dot ? "·" : "") + num;
    if (den_count > 0)
        body += "/" + (den_count > 1 ? "(" + den + ")" : den);
    return body;
}

std::string join_terms(const std::vector<std::string>& parts,
                       const std::vector<bool>& negative) {
    if (parts.empty()) return "0";
    std::string out = (negative[0] ? "-" : "") + parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i)
        out += (negative[i] ? " - " : " + ") + parts[i];
    return out;
}

}  // namespace

std::string render(const FittedModel& model, int precision) {
    const auto& structure = model.structure();
    std::vector<std::string> parts;
    std::vector<bool> negative;
    for (std::size_t t = 0; t < model.coefficients().size(); ++t) {
        const double c = model.coefficients()[t];
        parts.push_back(format_number(std::abs(c), precision) +
                        term_body(structure.row(t), structure.variable_names(), true));
        negative.push_back(std::signbit(c) && c != 0.0);
    }
    if (model.bias()) {
        const double b = *model.bias();
        parts.push_back(format_number(std::abs(b), precision));
        negative.push_back(std::signbit(b) && b != 0.0);
    }
    return join_terms(parts, negative);
}

std::string render_structure(const ExponentMatrix& structure, bool bias) {
    std::vector<std::string> parts;
    std::vector<bool> negative;
    if (bias) {
        parts.emplace_back("a0");
        negative.push_back(false);
    }
    for (std::size_t t = 0; t < structure.term_count(); ++t) {
        parts.push_back("a" + std::to_string(t + 1) +
                        term_body(structure.row(t), structure.variable_names(), true));
        negative.push_back(false);
    }
    return join_terms(parts, negative);
}

}  // namespace epr
