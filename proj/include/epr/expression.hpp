#pragma once

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epr/dataset.hpp"

namespace epr {

/// Allowed exponent values for the model search, kept strictly increasing.
/// Zero must be a member: a zero exponent excludes the variable from a
/// term, which is how the search turns inputs off.
class CandidateExponents {
public:
    explicit CandidateExponents(std::vector<double> values);

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool contains(double value) const;
    std::size_t index_of(double value) const;

private:
    std::vector<double> values_;
};

/// Pseudo-polynomial model structure: one row of per-variable exponents per
/// term. The genome of the evolutionary search. An empty matrix (zero rows)
/// denotes the bias-only model.
class ExponentMatrix {
public:
    ExponentMatrix(std::vector<std::vector<double>> exponents,
                   std::vector<std::string> variable_names);

    std::size_t term_count() const noexcept { return rows_.size(); }
    std::size_t input_count() const noexcept { return variable_names_.size(); }
    bool empty() const noexcept { return rows_.empty(); }

    const std::vector<double>& row(std::size_t i) const { return rows_[i]; }
    const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }
    const std::vector<std::string>& variable_names() const noexcept {
        return variable_names_;
    }

    /// Number of distinct variables appearing with a nonzero exponent.
    std::size_t distinct_inputs_used() const;

    bool conforms_to(const CandidateExponents& exponents) const;

    friend bool operator==(const ExponentMatrix& a, const ExponentMatrix& b) {
        return a.rows_ == b.rows_;
    }
    /// Lexicographic order on the exponent rows; canonical tie-break.
    friend bool operator<(const ExponentMatrix& a, const ExponentMatrix& b) {
        return a.rows_ < b.rows_;
    }

private:
    std::vector<std::vector<double>> rows_;
    std::vector<std::string> variable_names_;
};

/// Removes duplicate rows and all-zero rows (their effect is the bias term)
/// and sorts rows lexicographically. The result evaluates identically as a
/// model family and is the unique representative used for caching,
/// enumeration and tie-breaking.
ExponentMatrix canonicalize(const ExponentMatrix& structure);

/// Product over variables of value^exponent. Zero exponents contribute a
/// factor 1 (the variable is absent from the term; 0^0 is never formed).
/// Throws DomainError when a value <= 0 meets a negative or non-integer
/// exponent.
double term_value(std::span<const double> values, std::span<const double> exponent_row);
double term_value(const std::map<std::string, double>& record,
                  const std::vector<double>& exponent_row,
                  const std::vector<std::string>& variable_names);

/// n x (m[+1]) matrix whose column j holds term j evaluated on each view
/// row; with bias, a trailing all-ones column. Domain errors are rethrown
/// with the offending row and term identified.
Eigen::MatrixXd design_matrix(const CaseView& view, const Dataset& dataset,
                              const ExponentMatrix& structure, bool bias);

/// Fit statistics attached to a fitted model. Standard errors are per term
/// (the bias has its own field). pruned_terms records the row indices
/// removed by significance pruning, in removal order, relative to the
/// structure the pruning started from.
struct FitInfo {
    double sse = 0.0;
    double r_squared = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_rows = 0;
    std::vector<double> standard_errors;
    std::optional<double> bias_standard_error;
    std::vector<std::size_t> pruned_terms;
    bool condition_warning = false;
};

/// Structure plus estimated coefficients (one per term) and optional bias.
class FittedModel {
public:
    FittedModel(ExponentMatrix structure, std::vector<double> coefficients,
                std::optional<double> bias, FitInfo fit = {});

    const ExponentMatrix& structure() const noexcept { return structure_; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }
    const std::optional<double>& bias() const noexcept { return bias_; }
    const FitInfo& fit() const noexcept { return fit_; }

    /// Terms plus bias if present: the coefficient count objective.
    std::size_t coefficient_count() const noexcept {
        return coefficients_.size() + (bias_ ? 1 : 0);
    }

    double evaluate(const std::map<std::string, double>& record) const;
    /// Positional variant; values follow the structure's variable order.
    double evaluate(std::span<const double> values) const;

private:
    ExponentMatrix structure_;
    std::vector<double> coefficients_;
    std::optional<double> bias_;
    FitInfo fit_;
};

double evaluate(const FittedModel& model, const std::map<std::string, double>& record);

/// Formats with the requested number of significant digits; precision >= 17
/// yields the shortest representation that round-trips exactly.
std::string format_number(double value, int precision);

/// Renders a fitted model in the house style: one term per row with the
/// coefficient leading, negative exponents collected into a denominator,
/// exponent 1 omitted, bias appended last. A bias-only model renders as the
/// bias value alone.
std::string render(const FittedModel& model, int precision = 5);

/// Symbolic rendering with placeholder coefficients a0 (bias, leading),
/// a1..am; used to display bare structures.
std::string render_structure(const ExponentMatrix& structure, bool bias);

}  // namespace epr
