#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epr/dataset.hpp"

namespace epr {

/// Normalization constant for the correlation relative error; the
/// coefficients range over (-1, 1), so the mean error scale is taken as 1.
inline constexpr double kCorrelationErrorScale = 1.0;

/// Symmetric grid of Pearson coefficients with unit diagonal. n_pairs
/// records how many complete observations each entry used.
struct CorrelationMatrix {
    std::vector<std::string> variable_names;
    Eigen::MatrixXd values;
    Eigen::MatrixXi n_pairs;

    std::size_t index_of(std::string_view name) const;
};

/// Experimental versus model-derived correlation structure: elementwise
/// relative errors |rho_t - rho_e| / e_m and their off-diagonal mean.
struct CorrelationComparison {
    CorrelationMatrix experimental;
    CorrelationMatrix theoretical;
    Eigen::MatrixXd relative_errors;
    double mean_relative_error = 0.0;
};

/// Pearson linear correlation; result clamped to [-1, 1] against rounding.
/// Errors on constant input or fewer than two observations.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pairwise-complete correlation matrix: each entry uses exactly the rows
/// where both variables are present. Restricting `rows` gives the listwise
/// path. Any pair with fewer than two complete observations (or constant
/// on its overlap) is an error naming the pair.
CorrelationMatrix correlation_matrix(const Dataset& dataset,
                                     const std::vector<std::string>& variables);
CorrelationMatrix correlation_matrix(const Dataset& dataset,
                                     const std::vector<std::string>& variables,
                                     const std::vector<std::size_t>& rows);

/// Mean of |rho(target, input)| over the inputs.
double mean_abs_correlation(const CorrelationMatrix& matrix, std::string_view target,
                            const std::vector<std::string>& inputs);

CorrelationComparison compare_correlations(const CorrelationMatrix& experimental,
                                           const CorrelationMatrix& theoretical);

}  // namespace epr
