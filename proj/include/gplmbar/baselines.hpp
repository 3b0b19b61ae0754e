#pragma once

#include "gplmbar/ccd.hpp"
#include "gplmbar/design.hpp"
#include "gplmbar/family.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace gplmbar {

enum class BaselineMethod { lasso, adaptive_lasso };

BaselineMethod parse_baseline(std::string_view name);

/// Weighted L1 penalty 2 * lambda * w_j * |beta_j| on beta; infinite weights freeze the column.
PenaltyMap weighted_l1_penalty(const BlockMap& map, double lambda, const std::vector<double>& weights);

/// Minimizer of -2l + 2 lambda sum |beta_j|.
CoefficientBlocks lasso_fit(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                            double lambda, const CcdControls& ccd = {});

/// Ridge fit with precision xi on beta, used as the adaptive-LASSO pilot.
CoefficientBlocks ridge_pilot(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                              double xi = 1.0, const CcdControls& ccd = {});

/// 1 / |pilot beta_j|, infinite when |pilot beta_j| < 1e-8.
std::vector<double> adaptive_weights(const Eigen::VectorXd& pilot_beta);

CoefficientBlocks adaptive_lasso_fit(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                                     double lambda, const CoefficientBlocks& pilot, const CcdControls& ccd = {});

/// Fit with every beta held at zero.
CoefficientBlocks null_fit(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                           const CcdControls& ccd = {});

/// Smallest lambda at which every beta is zero: max_j |d(-l)/d beta_j| / w_j at the null fit.
double lambda_max(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                  const std::vector<double>& weights, const CcdControls& ccd = {});

/// `length` geometric points from lambda_max down to min_ratio * lambda_max.
std::vector<double> geometric_grid(double lambda_max, int length, double min_ratio);

struct PathStop {
    bool enabled = true;
    /// Stop once the fraction of null deviance explained reaches this.
    double max_deviance_ratio = 0.999;
    /// Stop once successive deviance ratios differ by less than this.
    double min_ratio_change = 1e-5;
};

struct LassoPath {
    std::vector<double> lambdas;
    /// Flat coefficient vectors, one per fitted lambda.
    std::vector<Eigen::VectorXd> coefficients;
    std::vector<bool> converged;
};

/// Warm-started weighted-L1 fits along a decreasing grid. May stop before the
/// end of the grid per `stop`; only fitted points are returned.
LassoPath lasso_path(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                     const std::vector<double>& grid, const std::vector<double>& weights,
                     const CcdControls& ccd = {}, const PathStop& stop = {});

struct CvSpec {
    int folds = 10;
    int grid_length = 100;
    double min_ratio = 1e-3;
    std::uint64_t seed = 1;
    /// Overrides the geometric grid when nonempty.
    std::vector<double> grid;
    PathStop stop;
    /// Stop walking the grid once the mean held-out deviance has failed to improve
    /// on its minimum for this many consecutive points; 0 walks the whole grid.
    int patience = 10;

    void validate(Eigen::Index n) const;
};

struct CvResult {
    double best_lambda = 0.0;
    std::size_t best_index = 0;
    std::vector<double> lambdas;
    /// Mean over folds of the per-observation held-out deviance.
    std::vector<double> mean_deviance;
    /// Fit on all rows along `lambdas`, the fitted prefix of the grid.
    LassoPath full_path;
    std::vector<double> weights;
    int fold_attempts = 1;

    CoefficientBlocks best(const BlockMap& map) const {
        return CoefficientBlocks::from_flat(full_path.coefficients[best_index], map);
    }
};

/// Fold index per observation. Binary responses are stratified by class.
std::vector<int> assign_folds(const Eigen::VectorXd& y, const Family& family, int folds, std::uint64_t seed);

/// k-fold CV over the lambda grid. For adaptive LASSO the weights come from a
/// ridge pilot on all rows.
CvResult cross_validate(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                        BaselineMethod method, const CvSpec& spec, const CcdControls& ccd = {});

/// Mean per-observation deviance of `coefficients` on the given rows.
double mean_deviance(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                     const Eigen::VectorXd& coefficients, const std::vector<Eigen::Index>& rows);

}  // namespace gplmbar
