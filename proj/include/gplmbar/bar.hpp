#pragma once

#include "gplmbar/ccd.hpp"
#include "gplmbar/design.hpp"
#include "gplmbar/family.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace gplmbar {

enum class LambdaCriterion { aic, bic };

LambdaCriterion parse_criterion(std::string_view name);
std::string to_string(LambdaCriterion c);

/// AIC -> 2, BIC -> log(n).
double select_lambda_fixed(LambdaCriterion criterion, double n);

struct BarControls {
    /// Ridge precision of the initial fit.
    double xi = 1.0;
    double lambda = 2.0;
    /// Stop when the largest change of any beta between outer iterations is below this.
    double outer_tolerance = 1e-6;
    int max_outer_iterations = 100;
    /// |beta| below this is set to exactly zero and dropped from later sweeps.
    double freeze_threshold = 1e-8;
    /// Early stop: support unchanged for this many iterations with changes below `stable_change`.
    int stable_support_iterations = 3;
    double stable_change = 1e-4;

    void validate() const;
};

struct FitResult {
    CoefficientBlocks coefficients;
    std::vector<Eigen::Index> support;
    bool converged = false;
    int outer_iterations = 0;
    /// max_j |beta_j^(s) - beta_j^(s-1)| for s = 1, 2, ...
    std::vector<double> max_change_log;
    /// Nonzero beta indices after the ridge start (entry 0) and each outer iteration.
    std::vector<std::vector<Eigen::Index>> support_log;
    /// Beta after the ridge start (entry 0) and each outer iteration.
    std::vector<Eigen::VectorXd> beta_log;
    int inner_passes = 0;
    bool inner_converged = true;
};

/// Called with (outer iteration, penalty map) before every inner fit; 0 is the ridge start.
using PenaltyObserver = std::function<void(int, const PenaltyMap&)>;

/// Broken adaptive ridge: ridge start, then reweighted ridge fits until beta settles.
FitResult bar_fit(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                  const BarControls& controls, const CcdControls& ccd = {},
                  const PenaltyObserver& observer = {});
FitResult bar_fit(const Dataset& data, const Family& family, const BarControls& controls,
                  const CcdControls& ccd = {});

struct PathPoint {
    double xi = 0.0;
    Eigen::VectorXd beta;
    std::vector<Eigen::Index> support;
    bool ok = false;
    bool converged = false;
    std::string error;
};

/// One bar_fit per xi value; failures are recorded and the grid continues.
std::vector<PathPoint> bar_path(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                                const std::vector<double>& xi_grid, double lambda,
                                const BarControls& base = {}, const CcdControls& ccd = {});

/// max over the support of |d(-2l)/db_j + 2 lambda / b_j| / (1 + 2 lambda / |b_j|).
double stationarity_check(const CoefficientBlocks& coefficients, const SieveDesign& design,
                          const Eigen::VectorXd& y, const Family& family, double lambda);
inline double stationarity_check(const FitResult& fit, const SieveDesign& design, const Eigen::VectorXd& y,
                                 const Family& family, double lambda) {
    return stationarity_check(fit.coefficients, design, y, family, lambda);
}

}  // namespace gplmbar
