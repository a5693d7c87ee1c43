#include "epr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "epr/error.hpp"

namespace epr {

std::size_t CorrelationMatrix::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < variable_names.size(); ++i)
        if (variable_names[i] == name) return i;
    throw DataError("variable '" + std::string(name) + "' is not in the correlation matrix");
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("pearson inputs differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw DataError("pearson needs at least 2 observations");

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double cross = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        cross += dx * dy;
        sx += dx * dx;
        sy += dy * dy;
    }
    if (sx <= 0.0 || sy <= 0.0)
        throw DataError("pearson is undefined for a constant input");
    return std::clamp(cross / std::sqrt(sx * sy), -1.0, 1.0);
}

namespace {

CorrelationMatrix matrix_over_rows(const Dataset& dataset,
                                   const std::vector<std::string>& variables,
                                   const std::vector<std::size_t>& rows) {
    if (variables.empty()) throw DataError("correlation matrix needs variables");
    std::vector<std::size_t> cols;
    for (const auto& name : variables) cols.push_back(dataset.index_of(name));

    const auto v = static_cast<Eigen::Index>(variables.size());
    CorrelationMatrix matrix;
    matrix.variable_names = variables;
    matrix.values = Eigen::MatrixXd::Identity(v, v);
    matrix.n_pairs = Eigen::MatrixXi::Zero(v, v);

    for (Eigen::Index i = 0; i < v; ++i) {
        int present = 0;
        for (const std::size_t r : rows)
            if (!dataset.is_missing(r, cols[static_cast<std::size_t>(i)])) ++present;
        matrix.n_pairs(i, i) = present;
    }

    // One computation per unordered pair keeps the grid exactly symmetric.
    for (Eigen::Index i = 0; i < v; ++i)
        for (Eigen::Index j = i + 1; j < v; ++j) {
            std::vector<double> xi, xj;
            for (const std::size_t r : rows) {
                const auto ci = cols[static_cast<std::size_t>(i)];
                const auto cj = cols[static_cast<std::size_t>(j)];
                if (dataset.is_missing(r, ci) || dataset.is_missing(r, cj)) continue;
                xi.push_back(dataset.value(r, ci));
                xj.push_back(dataset.value(r, cj));
            }
            if (xi.size() < 2)
                throw DataError("correlation pair (" + variables[static_cast<std::size_t>(i)] +
                                ", " + variables[static_cast<std::size_t>(j)] +
                                ") has fewer than 2 complete observations");
            double rho;
            try {
                rho = pearson(xi, xj);
            } catch (const DataError&) {
                throw DataError("correlation pair (" + variables[static_cast<std::size_t>(i)] +
                                ", " + variables[static_cast<std::size_t>(j)] +
                                ") is constant on its complete observations");
            }
            matrix.values(i, j) = rho;
            matrix.values(j, i) = rho;
            matrix.n_pairs(i, j) = static_cast<int>(xi.size());
            matrix.n_pairs(j, i) = static_cast<int>(xi.size());
        }
    return matrix;
}

}  // namespace

CorrelationMatrix correlation_matrix(const Dataset& dataset,
                                     const std::vector<std::string>& variables) {
    std::vector<std::size_t> rows(dataset.n_rows());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    return matrix_over_rows(dataset, variables, rows);
}

CorrelationMatrix correlation_matrix(const Dataset& dataset,
                                     const std::vector<std::string>& variables,
                                     const std::vector<std::size_t>& rows) {
    return matrix_over_rows(dataset, variables, rows);
}

double mean_abs_correlation(const CorrelationMatrix& matrix, std::string_view target,
                            const std::vector<std::string>& inputs) {
    const auto t = static_cast<Eigen::Index>(matrix.index_of(target));
    if (inputs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& input : inputs)
        sum += std::abs(matrix.values(t, static_cast<Eigen::Index>(matrix.index_of(input))));
    return sum / static_cast<double>(inputs.size());
}

CorrelationComparison compare_correlations(const CorrelationMatrix& experimental,
                                           const CorrelationMatrix& theoretical) {
    if (experimental.variable_names != theoretical.variable_names)
        throw DataError("correlation matrices cover different variable lists");

    CorrelationComparison comparison;
    comparison.experimental = experimental;
    comparison.theoretical = theoretical;
    const Eigen::Index v = experimental.values.rows();
    comparison.relative_errors =
        (theoretical.values - experimental.values).cwiseAbs() / kCorrelationErrorScale;

    double sum = 0.0;
    std::size_t pairs = 0;
    for (Eigen::Index i = 0; i < v; ++i)
        for (Eigen::Index j = i + 1; j < v; ++j) {
            sum += comparison.relative_errors(i, j);
            ++pairs;
        }
    comparison.mean_relative_error = pairs ? sum / static_cast<double>(pairs) : 0.0;
    return comparison;
}

}  // namespace epr
