#pragma once

#include <filesystem>
#include <string>

#include "epr/evolution.hpp"
#include "epr/metrics.hpp"

namespace epr {

/// All artifact builders return the full file content as a string; numeric
/// cells use exact round-trip formatting so repeated runs are byte-equal.

std::string front_csv(const ParetoFront& front, int render_precision);

/// Structured text listing: one record per model with the rendered
/// expression, objective vector, R-squared, coefficients, standard errors
/// and pruned terms.
std::string front_text(const ParetoFront& front, int render_precision);

/// Two columns, model index versus R-squared.
std::string r2_curve_csv(const ParetoFront& front);

std::string correlation_csv(const CorrelationMatrix& matrix);
std::string grid_csv(const std::vector<std::string>& names, const Eigen::MatrixXd& grid);
std::string comparison_text(const CorrelationComparison& comparison, std::size_t rows_used,
                            const std::string& row_policy);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string csv_quote(const std::string& field);

}  // namespace epr
