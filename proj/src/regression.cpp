#include "epr/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "epr/error.hpp"

namespace epr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_system(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    if (design.cols() < 1) throw DataError("least-squares design has no columns");
    if (design.rows() != y.size())
        throw DataError("design and target lengths differ");
    if (design.rows() < design.cols())
        throw DataError("underdetermined least-squares system: " +
                        std::to_string(design.rows()) + " rows for " +
                        std::to_string(design.cols()) + " coefficients");
    if (!design.allFinite() || !y.allFinite())
        throw DataError("least-squares system contains non-finite values");
}

/// Unit-RMS column scales, purely for conditioning. Zero columns keep
/// scale 1 so the unscaling stays well-defined.
Eigen::VectorXd column_scales(const Eigen::MatrixXd& design) {
    const double n = static_cast<double>(design.rows());
    Eigen::VectorXd scales(design.cols());
    for (Eigen::Index j = 0; j < design.cols(); ++j) {
        const double rms = std::sqrt(design.col(j).squaredNorm() / n);
        scales(j) = rms > 0.0 ? rms : 1.0;
    }
    return scales;
}

double coefficient_of_determination(double sse, const Eigen::VectorXd& y) {
    const double mean = y.mean();
    const double sst = (y.array() - mean).matrix().squaredNorm();
    if (sst > 0.0) return 1.0 - sse / sst;
    return sse <= 1e-24 * std::max(1.0, y.squaredNorm()) ? 1.0 : -kInf;
}

}  // namespace

FitMode fit_mode_from_string(std::string_view text) {
    if (text == "unconstrained") return FitMode::unconstrained;
    if (text == "non_negative") return FitMode::non_negative;
    throw ConfigError("unknown fit mode '" + std::string(text) +
                      "' (expected unconstrained or non_negative)");
}

std::string_view to_string(FitMode mode) {
    return mode == FitMode::unconstrained ? "unconstrained" : "non_negative";
}

LsFit fit_ls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    check_system(design, y);
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();

    const Eigen::VectorXd scales = column_scales(design);
    Eigen::MatrixXd scaled = design;
    for (Eigen::Index j = 0; j < p; ++j) scaled.col(j) /= scales(j);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(std::numeric_limits<double>::epsilon() *
                     static_cast<double>(std::max(n, p)));
    const Eigen::Index rank = svd.rank();

    LsFit fit;
    const Eigen::VectorXd scaled_coeffs = svd.solve(y);  // minimum-norm when rank < p
    fit.coefficients = scaled_coeffs.cwiseQuotient(scales);
    fit.condition_warning = rank < p;
    fit.sse = (y - design * fit.coefficients).squaredNorm();
    fit.r_squared = coefficient_of_determination(fit.sse, y);

    const double sigma2 = n > p ? fit.sse / static_cast<double>(n - p) : kInf;
    const auto& sv = svd.singularValues();
    const auto& v = svd.matrixV();
    fit.standard_errors.resize(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        double scaled_var = 0.0;
        for (Eigen::Index i = 0; i < rank; ++i)
            scaled_var += v(j, i) * v(j, i) / (sv(i) * sv(i));
        fit.standard_errors[static_cast<std::size_t>(j)] =
            std::isfinite(sigma2) ? std::sqrt(sigma2 * scaled_var) / scales(j) : kInf;
    }
    return fit;
}

LsFit fit_nnls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    check_system(design, y);
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();

    const Eigen::VectorXd scales = column_scales(design);
    Eigen::MatrixXd scaled = design;
    for (Eigen::Index j = 0; j < p; ++j) scaled.col(j) /= scales(j);

    bool warning = false;
    const auto solve_passive = [&](const std::vector<Eigen::Index>& passive) {
        Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(passive.size()));
        for (std::size_t i = 0; i < passive.size(); ++i) sub.col(i) = scaled.col(passive[i]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
        if (qr.rank() < sub.cols()) {
            warning = true;
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub, Eigen::ComputeThinU |
                                                           Eigen::ComputeThinV);
            svd.setThreshold(std::numeric_limits<double>::epsilon() *
                             static_cast<double>(std::max(n, sub.cols())));
            return Eigen::VectorXd(svd.solve(y));
        }
        return Eigen::VectorXd(qr.solve(y));
    };

    Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
    std::vector<bool> in_passive(static_cast<std::size_t>(p), false);
    const double gradient_scale = (scaled.transpose() * y).cwiseAbs().maxCoeff();
    const double tol = std::max(1e-10 * gradient_scale, 1e-30);

    const int max_outer = 30 * static_cast<int>(p) + 10;
    for (int outer = 0; outer < max_outer; ++outer) {
        const Eigen::VectorXd w = scaled.transpose() * (y - scaled * x);
        Eigen::Index best = -1;
        double best_w = tol;
        for (Eigen::Index j = 0; j < p; ++j)
            if (!in_passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
                best_w = w(j);
                best = j;
            }
        if (best < 0) break;  // KKT satisfied
        in_passive[static_cast<std::size_t>(best)] = true;

        for (int inner = 0; inner < 10 * static_cast<int>(p) + 10; ++inner) {
            std::vector<Eigen::Index> passive;
            for (Eigen::Index j = 0; j < p; ++j)
                if (in_passive[static_cast<std::size_t>(j)]) passive.push_back(j);
            const Eigen::VectorXd z = solve_passive(passive);

            bool feasible = true;
            for (Eigen::Index i = 0; i < z.size(); ++i)
                if (z(i) <= 0.0) {
                    feasible = false;
                    break;
                }
            if (feasible) {
                x.setZero();
                for (std::size_t i = 0; i < passive.size(); ++i) x(passive[i]) = z(i);
                break;
            }

            double alpha = kInf;
            for (std::size_t i = 0; i < passive.size(); ++i)
                if (z(static_cast<Eigen::Index>(i)) <= 0.0) {
                    const double xi = x(passive[i]);
                    const double step = xi / (xi - z(static_cast<Eigen::Index>(i)));
                    alpha = std::min(alpha, step);
                }
            for (std::size_t i = 0; i < passive.size(); ++i) {
                const Eigen::Index j = passive[i];
                x(j) += alpha * (z(static_cast<Eigen::Index>(i)) - x(j));
                if (x(j) <= tol * 1e-3 || !(x(j) > 0.0)) {
                    x(j) = 0.0;
                    in_passive[static_cast<std::size_t>(j)] = false;
                }
            }
        }
    }

    LsFit fit;
    fit.coefficients = x.cwiseQuotient(scales);
    fit.condition_warning = warning;
    fit.sse = (y - design * fit.coefficients).squaredNorm();
    fit.r_squared = coefficient_of_determination(fit.sse, y);

    // Standard errors on the active (positive) subset only.
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < p; ++j)
        if (fit.coefficients(j) > 0.0) active.push_back(j);
    fit.standard_errors.assign(static_cast<std::size_t>(p), kInf);
    if (!active.empty()) {
        const Eigen::Index s = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd sub(n, s);
        for (Eigen::Index i = 0; i < s; ++i)
            sub.col(i) = scaled.col(active[static_cast<std::size_t>(i)]);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub, Eigen::ComputeThinV);
        svd.setThreshold(std::numeric_limits<double>::epsilon() *
                         static_cast<double>(std::max(n, s)));
        const double sigma2 = n > s ? fit.sse / static_cast<double>(n - s) : kInf;
        const auto& sv = svd.singularValues();
        const auto& v = svd.matrixV();
        for (Eigen::Index i = 0; i < s; ++i) {
            double scaled_var = 0.0;
            for (Eigen::Index r = 0; r < svd.rank(); ++r)
                scaled_var += v(i, r) * v(i, r) / (sv(r) * sv(r));
            fit.standard_errors[static_cast<std::size_t>(active[static_cast<std::size_t>(i)])] =
                std::isfinite(sigma2)
                    ? std::sqrt(sigma2 * scaled_var) / scales(active[static_cast<std::size_t>(i)])
                    : kInf;
        }
    }
    return fit;
}

double r_squared(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual) {
    if (predicted.size() != actual.size())
        throw DataError("predicted and actual lengths differ");
    if (actual.size() < 2) throw DataError("r_squared needs at least 2 observations");
    const double mean = actual.mean();
    const double sst = (actual.array() - mean).matrix().squaredNorm();
    if (sst <= 0.0)
        throw DataError("r_squared is undefined: actual values are constant");
    const double sse = (predicted - actual).squaredNorm();
    return 1.0 - sse / sst;
}

FittedModel fit_structure(const ExponentMatrix& structure, const CaseView& view,
                          const Dataset& dataset, const FitOptions& options) {
    const std::size_t target_col = dataset.index_of(view.target);
    const std::size_t n = view.row_indices.size();
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        y(static_cast<Eigen::Index>(i)) = dataset.value(view.row_indices[i], target_col);

    const std::size_t m = structure.term_count();
    if (m == 0 && !options.bias) {
        // Nothing to estimate: the model predicts zero everywhere.
        FitInfo info;
        info.sse = y.squaredNorm();
        info.r_squared = coefficient_of_determination(info.sse, y);
        info.n_rows = n;
        return FittedModel(structure, {}, std::nullopt, std::move(info));
    }

    const Eigen::MatrixXd design = design_matrix(view, dataset, structure, options.bias);
    const LsFit ls = options.mode == FitMode::non_negative ? fit_nnls(design, y)
                                                           : fit_ls(design, y);

    std::vector<double> coefficients(m);
    for (std::size_t t = 0; t < m; ++t)
        coefficients[t] = ls.coefficients(static_cast<Eigen::Index>(t));
    std::optional<double> bias;
    if (options.bias) bias = ls.coefficients(static_cast<Eigen::Index>(m));

    FitInfo info;
    info.sse = ls.sse;
    info.r_squared = ls.r_squared;
    info.n_rows = n;
    info.standard_errors.assign(ls.standard_errors.begin(),
                                ls.standard_errors.begin() + static_cast<long>(m));
    if (options.bias) info.bias_standard_error = ls.standard_errors[m];
    info.condition_warning = ls.condition_warning;
    return FittedModel(structure, std::move(coefficients), bias, std::move(info));
}

FittedModel prune_insignificant(const FittedModel& model, const CaseView& view,
                                const Dataset& dataset, const FitOptions& options) {
    FittedModel current = model;
    std::vector<std::size_t> alive(model.structure().term_count());
    std::iota(alive.begin(), alive.end(), std::size_t{0});
    std::vector<std::size_t> pruned = model.fit().pruned_terms;

    const std::size_t target_col = dataset.index_of(view.target);
    double target_sq = 0.0;
    for (const std::size_t r : view.row_indices) {
        const double y = dataset.value(r, target_col);
        target_sq += y * y;
    }
    const double target_rms =
        std::sqrt(target_sq / static_cast<double>(view.row_indices.size()));

    for (int iter = 0; iter < options.max_prune_iterations; ++iter) {
        const std::size_t m = current.structure().term_count();
        if (m == 0) break;

        // A term whose whole contribution sits below the target's floating
        // noise floor is numerically zero regardless of its t-ratio (exact
        // fits drive every standard error to zero).
        const Eigen::MatrixXd columns =
            design_matrix(view, dataset, current.structure(), false);
        const double n = static_cast<double>(view.row_indices.size());

        std::size_t weakest = 0;
        double weakest_ratio = kInf;
        for (std::size_t t = 0; t < m; ++t) {
            const double column_rms = std::sqrt(
                columns.col(static_cast<Eigen::Index>(t)).squaredNorm() / n);
            const double contribution = std::abs(current.coefficients()[t]) * column_rms;
            double ratio;
            if (contribution <= 1e-12 * target_rms) {
                ratio = 0.0;
            } else {
                const double se = current.fit().standard_errors[t];
                ratio = std::abs(current.coefficients()[t]) / se;
                if (std::isnan(ratio)) ratio = 0.0;
            }
            if (ratio < weakest_ratio) {
                weakest_ratio = ratio;
                weakest = t;
            }
        }
        if (weakest_ratio >= options.significance_multiplier) break;

        pruned.push_back(alive[weakest]);
        alive.erase(alive.begin() + static_cast<long>(weakest));
        std::vector<std::vector<double>> rows = current.structure().rows();
        rows.erase(rows.begin() + static_cast<long>(weakest));
        const ExponentMatrix reduced(std::move(rows),
                                     current.structure().variable_names());
        current = fit_structure(reduced, view, dataset, options);
    }

    FitInfo info = current.fit();
    info.pruned_terms = std::move(pruned);
    return FittedModel(current.structure(), current.coefficients(), current.bias(),
                       std::move(info));
}

}  // namespace epr
