#include "epr/artifacts.hpp"

#include <fstream>
#include <sstream>

#include "epr/error.hpp"

namespace epr {

namespace {

std::string exact(double v) { return format_number(v, 17); }

std::string joined_indices(const std::vector<std::size_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
        out += (i ? ";" : "") + std::to_string(values[i] + 1);
    return out;
}

std::string joined_numbers(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ";" : "") + exact(values[i]);
    return out;
}

}  // namespace

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (const char c : field) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + "\"";
}

std::string front_csv(const ParetoFront& front, int render_precision) {
    std::ostringstream os;
    os << "model,n_coefficients,n_inputs,sse,r_squared,condition_warning,expression,"
          "coefficients,standard_errors,bias,bias_standard_error,pruned_terms\n";
    for (std::size_t i = 0; i < front.size(); ++i) {
        const auto& entry = front[i];
        const auto& fit = entry.model.fit();
        os << (i + 1) << ',' << entry.objectives.n_coefficients << ','
           << entry.objectives.n_inputs << ',' << exact(entry.objectives.fitness_cost) << ','
           << exact(fit.r_squared) << ',' << (fit.condition_warning ? 1 : 0) << ','
           << csv_quote(render(entry.model, render_precision)) << ','
           << joined_numbers(entry.model.coefficients()) << ','
           << joined_numbers(fit.standard_errors) << ','
           << (entry.model.bias() ? exact(*entry.model.bias()) : std::string()) << ','
           << (fit.bias_standard_error ? exact(*fit.bias_standard_error) : std::string())
           << ',' << joined_indices(fit.pruned_terms) << '\n';
    }
    return os.str();
}

std::string front_text(const ParetoFront& front, int render_precision) {
    std::ostringstream os;
    for (std::size_t i = 0; i < front.size(); ++i) {
        const auto& entry = front[i];
        const auto& fit = entry.model.fit();
        os << "model " << (i + 1) << ": " << render(entry.model, render_precision) << '\n';
        os << "  objectives: sse=" << format_number(entry.objectives.fitness_cost, 6)
           << " coefficients=" << entry.objectives.n_coefficients
           << " inputs=" << entry.objectives.n_inputs << '\n';
        os << "  r_squared: " << format_number(fit.r_squared, 6) << "  (n=" << fit.n_rows
           << ")\n";
        for (std::size_t t = 0; t < entry.model.coefficients().size(); ++t)
            os << "  a" << (t + 1) << " = " << format_number(entry.model.coefficients()[t], 6)
               << "  (se " << format_number(fit.standard_errors[t], 6) << ")\n";
        if (entry.model.bias())
            os << "  a0 = " << format_number(*entry.model.bias(), 6) << "  (se "
               << (fit.bias_standard_error ? format_number(*fit.bias_standard_error, 6)
                                           : std::string("-"))
               << ")\n";
        if (!fit.pruned_terms.empty())
            os << "  pruned terms: " << joined_indices(fit.pruned_terms) << '\n';
        if (fit.condition_warning) os << "  condition warning: rank-deficient fit\n";
        os << '\n';
    }
    return os.str();
}

std::string r2_curve_csv(const ParetoFront& front) {
    std::ostringstream os;
    os << "model,r_squared\n";
    for (std::size_t i = 0; i < front.size(); ++i)
        os << (i + 1) << ',' << exact(front[i].model.fit().r_squared) << '\n';
    return os.str();
}

std::string correlation_csv(const CorrelationMatrix& matrix) {
    std::ostringstream os;
    os << "variable";
    for (const auto& name : matrix.variable_names) os << ',' << csv_quote(name);
    os << '\n';
    for (Eigen::Index i = 0; i < matrix.values.rows(); ++i) {
        os << csv_quote(matrix.variable_names[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < matrix.values.cols(); ++j)
            os << ',' << exact(matrix.values(i, j));
        os << '\n';
    }
    return os.str();
}

std::string grid_csv(const std::vector<std::string>& names, const Eigen::MatrixXd& grid) {
    std::ostringstream os;
    os << "variable";
    for (const auto& name : names) os << ',' << csv_quote(name);
    os << '\n';
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        os << csv_quote(names[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < grid.cols(); ++j) os << ',' << exact(grid(i, j));
        os << '\n';
    }
    return os.str();
}

std::string comparison_text(const CorrelationComparison& comparison, std::size_t rows_used,
                            const std::string& row_policy) {
    std::ostringstream os;
    os << "correlation comparison\n";
    os << "  rows used: " << rows_used << " (" << row_policy << ")\n";
    os << "  variables: ";
    for (std::size_t i = 0; i < comparison.experimental.variable_names.size(); ++i)
        os << (i ? ", " : "") << comparison.experimental.variable_names[i];
    os << '\n';
    os << "  mean relative error: " << exact(comparison.mean_relative_error) << '\n';
    const Eigen::Index v = comparison.relative_errors.rows();
    os << "  per-pair relative errors (upper triangle):\n";
    for (Eigen::Index i = 0; i < v; ++i)
        for (Eigen::Index j = i + 1; j < v; ++j)
            os << "    " << comparison.experimental.variable_names[static_cast<std::size_t>(i)]
               << " ~ " << comparison.experimental.variable_names[static_cast<std::size_t>(j)]
               << ": experimental=" << format_number(comparison.experimental.values(i, j), 6)
               << " theoretical=" << format_number(comparison.theoretical.values(i, j), 6)
               << " e_r=" << format_number(comparison.relative_errors(i, j), 6) << '\n';
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace epr
