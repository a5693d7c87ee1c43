#pragma once

#include <Eigen/Dense>

#include "epr/expression.hpp"

namespace epr {

enum class FitMode { unconstrained, non_negative };

FitMode fit_mode_from_string(std::string_view text);
std::string_view to_string(FitMode mode);

struct FitOptions {
    FitMode mode = FitMode::unconstrained;
    bool bias = true;
    /// Terms whose |coefficient| / standard-error ratio falls below this are
    /// pruned (smallest ratio first, refitting in between).
    double significance_multiplier = 2.0;
    int max_prune_iterations = 32;
};

/// Raw least-squares solution over a design matrix. Standard errors come
/// from the classical OLS covariance sigma^2 (D'D)^-1 with
/// sigma^2 = SSE/(n-p); in non-negative mode they are computed on the
/// active (positive) subset and are +inf for clamped coefficients.
struct LsFit {
    Eigen::VectorXd coefficients;
    double sse = 0.0;
    double r_squared = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> standard_errors;
    bool condition_warning = false;
};

/// Minimizes ||design a - y||^2. Rank-deficient systems are solved with the
/// minimum-norm convention and flagged via condition_warning rather than
/// rejected, so degenerate structures stay comparable inside the search.
LsFit fit_ls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y);

/// Minimizes ||design a - y||^2 subject to a >= 0 (Lawson-Hanson active
/// set). At the solution the KKT conditions hold: near-zero gradient on
/// positive coefficients, non-negative gradient on clamped ones.
LsFit fit_nnls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y);

/// 1 - SSE/SST. May be negative for models worse than the mean; errors when
/// the actual values are constant (undefined denominator).
double r_squared(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual);

/// Builds the design matrix for a structure on a view and fits it in the
/// requested mode. Does not prune.
FittedModel fit_structure(const ExponentMatrix& structure, const CaseView& view,
                          const Dataset& dataset, const FitOptions& options);

/// Iteratively removes the term with the smallest |a_j|/se_j ratio while
/// that ratio is below the significance multiplier, refitting after each
/// removal, until every surviving term passes or only the bias remains.
FittedModel prune_insignificant(const FittedModel& model, const CaseView& view,
                                const Dataset& dataset, const FitOptions& options);

}  // namespace epr
