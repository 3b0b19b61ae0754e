#pragma once

#include "gplmbar/design.hpp"
#include "gplmbar/family.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gplmbar {

/// Replaces NaN entries by the column mean of the observed entries. Returns the
/// number of imputed entries per column; all-missing columns are left as NaN.
std::vector<int> impute_column_means(Eigen::MatrixXd& x);

struct MafReport {
    double threshold = 0.1;
    /// NaN for all-missing columns.
    std::vector<double> maf;
    std::vector<int> missing;
    std::vector<Eigen::Index> retained;
    /// Columns with no observed genotype; never retained.
    std::vector<Eigen::Index> all_missing;
};

/// MAF_j = min(f_j, 1 - f_j), f_j = mean(x_j) / 2 over observed entries. NaN marks
/// a missing genotype; any other value outside {0, 1, 2} is an error.
MafReport maf_filter(const Eigen::MatrixXd& genotypes, double threshold);

struct UnivariateResult {
    double coefficient = 0.0;
    double standard_error = 0.0;
    double p_value = 1.0;
    bool separated = false;
    bool constant = false;
    bool converged = true;
};

/// Intercept plus one column, unpenalized; Wald p-value against the standard normal.
UnivariateResult univariate_test(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Family& family);

struct ScreenReport {
    double maf_threshold = 0.0;
    double p_threshold = 0.1;
    std::vector<double> maf;
    std::vector<int> missing;
    /// Entry j is meaningful only when tested[j].
    std::vector<UnivariateResult> univariate;
    std::vector<bool> tested;
    std::vector<Eigen::Index> retained;
    std::vector<std::string> warnings;
};

/// Univariate screen of every column of data.x; retains p < p_threshold.
ScreenReport univariate_screen(const Dataset& data, const Family& family, double p_threshold, int threads = 0);

/// MAF filter, then univariate screen on the survivors. Missing genotypes in
/// data.x are mean-imputed in place first.
ScreenReport screen_genotypes(Dataset& data, const Family& family, double maf_threshold, double p_threshold,
                              int threads = 0);

/// Row indices of one bootstrap resample.
using Resampler = std::function<std::vector<Eigen::Index>(int resample)>;
using FitRecipe = std::function<CoefficientBlocks(const Dataset&)>;

/// With replacement, within each response class for logistic data.
Resampler stratified_resampler(const Eigen::VectorXd& y, const Family& family, std::uint64_t seed);

struct BootstrapResult {
    CoefficientBlocks standard_error;
    CoefficientBlocks mean;
    /// Fraction of successful resamples with beta_j != 0.
    std::vector<double> selection_frequency;
    int requested = 0;
    int effective = 0;
    std::vector<std::string> errors;
};

/// Reruns `recipe` on `resamples` resamples and reports per-coefficient sample SDs.
BootstrapResult bootstrap_se(const Dataset& data, const FitRecipe& recipe, int resamples, const Resampler& resampler,
                             int threads = 0);

}  // namespace gplmbar
