#include "gplmbar/bar.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gplmbar {

LambdaCriterion parse_criterion(std::string_view name) {
    if (name == "aic" || name == "AIC") return LambdaCriterion::aic;
    if (name == "bic" || name == "BIC") return LambdaCriterion::bic;
    throw std::invalid_argument("unknown lambda criterion '" + std::string(name) + "' (expected aic or bic)");
}

std::string to_string(LambdaCriterion c) { return c == LambdaCriterion::aic ? "aic" : "bic"; }

double select_lambda_fixed(LambdaCriterion criterion, double n) {
    if (criterion == LambdaCriterion::aic) return 2.0;
    if (!(n > 1.0)) throw std::invalid_argument("BIC lambda needs a sample size above 1");
    return std::log(n);
}

void BarControls::validate() const {
    if (!(xi > 0.0)) throw std::invalid_argument("xi must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(outer_tolerance > 0.0)) throw std::invalid_argument("outer tolerance must be positive");
    if (max_outer_iterations < 1) throw std::invalid_argument("need at least one outer iteration");
    if (!(freeze_threshold > 0.0 && freeze_threshold < outer_tolerance)) {
        throw std::invalid_argument("freeze threshold must be positive and below the outer tolerance");
    }
}

FitResult bar_fit(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                  const BarControls& controls, const CcdControls& ccd, const PenaltyObserver& observer) {
    controls.validate();
    const BlockMap& map = design.blocks;
    const Eigen::Index beta0 = map.beta_begin();
    const Eigen::Index p = map.beta_count;

    FitResult fit;
    PenaltyMap pen = beta_only_penalty(map, ColumnPenalty::ridge(controls.xi));
    if (observer) observer(0, pen);
    CcdResult inner = ccd_fit(design.columns, y, family, pen, ccd, Eigen::VectorXd::Zero(map.total()));
    fit.inner_passes += inner.passes;
    fit.inner_converged = fit.inner_converged && inner.converged;

    Eigen::VectorXd coef = inner.coefficients;
    fit.beta_log.push_back(coef.segment(beta0, p));
    fit.support_log.push_back(support_of(fit.beta_log.back()));

    int stable_run = 0;
    for (int s = 1; s <= controls.max_outer_iterations; ++s) {
        const Eigen::VectorXd previous = coef.segment(beta0, p);
        for (Eigen::Index j = 0; j < p; ++j) {
            const double b = previous[j];
            auto& slot = pen[static_cast<std::size_t>(beta0 + j)];
            slot = std::abs(b) < controls.freeze_threshold ? ColumnPenalty::frozen()
                                                           : ColumnPenalty::bar_weight(controls.lambda, b);
        }
        if (observer) observer(s, pen);
        inner = ccd_fit(design.columns, y, family, pen, ccd, coef);
        fit.inner_passes += inner.passes;
        fit.inner_converged = fit.inner_converged && inner.converged;
        coef = inner.coefficients;

        const Eigen::VectorXd current = coef.segment(beta0, p);
        const double change = p > 0 ? (current - previous).cwiseAbs().maxCoeff() : 0.0;
        fit.max_change_log.push_back(change);
        fit.beta_log.push_back(current);
        fit.support_log.push_back(support_of(current));
        fit.outer_iterations = s;

        const auto& supports = fit.support_log;
        stable_run = supports[supports.size() - 1] == supports[supports.size() - 2] ? stable_run + 1 : 0;
        // A coefficient headed for zero decays quadratically; stopping mid-collapse would
        // strand it between the freeze threshold and the tolerance.
        bool collapsing = false;
        for (Eigen::Index j = 0; j < p && !collapsing; ++j)
            collapsing = current[j] != 0.0 && std::abs(current[j]) < 0.5 * std::abs(previous[j]);
        if (collapsing) continue;
        if (change < controls.outer_tolerance ||
            (stable_run >= controls.stable_support_iterations && change < controls.stable_change)) {
            fit.converged = true;
            break;
        }
    }

    // Values below the freeze threshold are the absorbed zeros of the limit.
    for (Eigen::Index j = beta0; j < map.total(); ++j)
        if (std::abs(coef[j]) < controls.freeze_threshold) coef[j] = 0.0;
    fit.coefficients = CoefficientBlocks::from_flat(coef, map);
    fit.support = support_of(fit.coefficients.beta);
    return fit;
}

FitResult bar_fit(const Dataset& data, const Family& family, const BarControls& controls, const CcdControls& ccd) {
    const SieveDesign design = SieveDesign::build(data);
    return bar_fit(design, data.y, family, controls, ccd);
}

std::vector<PathPoint> bar_path(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                                const std::vector<double>& xi_grid, double lambda, const BarControls& base,
                                const CcdControls& ccd) {
    if (xi_grid.empty()) throw std::invalid_argument("xi grid must not be empty");
    if (!std::is_sorted(xi_grid.begin(), xi_grid.end())) throw std::invalid_argument("xi grid must be ascending");
    std::vector<PathPoint> rows;
    rows.reserve(xi_grid.size());
    for (double xi : xi_grid) {
        PathPoint row;
        row.xi = xi;
        try {
            BarControls c = base;
            c.xi = xi;
            c.lambda = lambda;
            const FitResult fit = bar_fit(design, y, family, c, ccd);
            row.beta = fit.coefficients.beta;
            row.support = fit.support;
            row.converged = fit.converged;
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

double stationarity_check(const CoefficientBlocks& coefficients, const SieveDesign& design,
                          const Eigen::VectorXd& y, const Family& family, double lambda) {
    const auto support = support_of(coefficients.beta);
    if (support.empty()) return 0.0;
    const Eigen::VectorXd grad = likelihood_gradient(design.columns, y, family, coefficients.flatten());
    double worst = 0.0;
    for (Eigen::Index j : support) {
        const double b = coefficients.beta[j];
        const double g = grad[design.blocks.beta_begin() + j];
        const double r = std::abs(g + 2.0 * lambda / b) / (1.0 + 2.0 * lambda / std::abs(b));
        worst = std::max(worst, r);
    }
    return worst;
}

}  // namespace gplmbar
