#include "gplmbar/baselines.hpp"
#include "gplmbar/simulate.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace gplmbar;
using namespace testing_support;

namespace {

CcdControls tight() {
    CcdControls c;
    c.tolerance = 1e-13;
    c.gradient_tolerance = 1e-9;
    c.max_passes = 20000;
    return c;
}

int false_positives(const Eigen::VectorXd& beta, const Eigen::VectorXd& truth) {
    int fp = 0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) fp += (beta[j] != 0.0 && truth[j] == 0.0) ? 1 : 0;
    return fp;
}

}  // namespace

TEST(Lasso, ZeroLambdaIsUnpenalized) {
    const Dataset data = small_dataset(300, 5, Eigen::VectorXd::Constant(5, 0.4), Family::logistic(), 1);
    const SieveDesign design = SieveDesign::build(data);
    const CoefficientBlocks l = lasso_fit(design, data.y, Family::logistic(), 0.0, tight());
    const CcdResult free = ccd_fit(design.columns, data.y, Family::logistic(),
                                   PenaltyMap(static_cast<std::size_t>(design.blocks.total())), tight(),
                                   Eigen::VectorXd::Zero(design.blocks.total()));
    EXPECT_LT((l.flatten() - free.coefficients).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Lasso, LambdaMaxZeroesEverything) {
    for (const Family f : {Family::logistic(), Family::poisson()}) {
        const Dataset data = small_dataset(300, 10, Eigen::VectorXd::LinSpaced(10, -0.5, 0.5), f, 2);
        const SieveDesign design = SieveDesign::build(data);
        const std::vector<double> w(10, 1.0);
        const double lmax = lambda_max(design, data.y, f, w, tight());
        EXPECT_TRUE(support_of(lasso_fit(design, data.y, f, lmax * 1.0001, tight()).beta).empty());
        EXPECT_TRUE(support_of(lasso_fit(design, data.y, f, lmax, tight()).beta).empty());
        EXPECT_FALSE(support_of(lasso_fit(design, data.y, f, lmax * 0.95, tight()).beta).empty());
    }
}

TEST(Lasso, StrongColumnEntersFirst) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(10);
    beta[6] = 2.0;
    const Dataset data = small_dataset(200, 10, beta, Family::logistic(), 3);
    const SieveDesign design = SieveDesign::build(data);
    const std::vector<double> w(10, 1.0);
    const double lmax = lambda_max(design, data.y, Family::logistic(), w);
    const LassoPath path = lasso_path(design, data.y, Family::logistic(), geometric_grid(lmax, 30, 0.01), w, tight(), {false});
    for (const auto& coef : path.coefficients) {
        const auto s = support_of(coef.tail(10));
        if (s.empty()) continue;
        EXPECT_EQ(s, (std::vector<Eigen::Index>{6}));
        break;
    }
}

TEST(Lasso, KktAlongPath) {
    const ScenarioConfig sc = ScenarioConfig::preset("s1", 300, 40);
    const Dataset data = generate_scenario(sc, 0);
    const SieveDesign design = SieveDesign::build(data);
    const std::vector<double> w(40, 1.0);
    const double lmax = lambda_max(design, data.y, sc.family, w, tight());
    const auto grid = geometric_grid(lmax, 20, 0.01);
    PathStop none;
    none.enabled = false;
    const LassoPath path = lasso_path(design, data.y, sc.family, grid, w, tight(), none);
    ASSERT_EQ(path.lambdas.size(), 20u);
    const Eigen::Index b0 = design.blocks.beta_begin();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_TRUE(path.converged[k]);
        const Eigen::VectorXd g = likelihood_gradient(design.columns, data.y, sc.family, path.coefficients[k]);
        for (Eigen::Index j = 0; j < b0; ++j) EXPECT_LT(std::abs(g[j]), 1e-4);
        for (Eigen::Index j = 0; j < 40; ++j) {
            const double b = path.coefficients[k][b0 + j];
            if (b == 0.0) {
                EXPECT_LE(std::abs(g[b0 + j]), 2.0 * grid[k] + 1e-4);
            } else {
                EXPECT_NEAR(g[b0 + j], -2.0 * grid[k] * (b > 0 ? 1.0 : -1.0), 1e-4);
            }
        }
    }
}

TEST(AdaptiveLasso, UniformWeightsMatchRescaledLasso) {
    const Dataset data = small_dataset(300, 8, Eigen::VectorXd::LinSpaced(8, -0.8, 0.8), Family::logistic(), 4);
    const SieveDesign design = SieveDesign::build(data);
    CoefficientBlocks pilot = CoefficientBlocks::zeros(design.blocks);
    pilot.beta.setConstant(-0.5);
    const CoefficientBlocks a = adaptive_lasso_fit(design, data.y, Family::logistic(), 3.0, pilot, tight());
    const CoefficientBlocks l = lasso_fit(design, data.y, Family::logistic(), 6.0, tight());
    EXPECT_LT((a.flatten() - l.flatten()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(AdaptiveLasso, ZeroPilotFreezes) {
    const Dataset data = small_dataset(300, 6, Eigen::VectorXd::Constant(6, 1.0), Family::logistic(), 5);
    const SieveDesign design = SieveDesign::build(data);
    CoefficientBlocks pilot = CoefficientBlocks::zeros(design.blocks);
    pilot.beta.setConstant(1.0);
    pilot.beta[2] = 0.0;
    pilot.beta[4] = 1e-9;
    const CoefficientBlocks a = adaptive_lasso_fit(design, data.y, Family::logistic(), 0.01, pilot);
    EXPECT_EQ(a.beta[2], 0.0);
    EXPECT_EQ(a.beta[4], 0.0);
    EXPECT_NE(a.beta[0], 0.0);
    const auto w = adaptive_weights(pilot.beta);
    EXPECT_TRUE(std::isinf(w[2]));
    EXPECT_EQ(w[0], 1.0);
}

TEST(AdaptiveLasso, FewerFalsePositivesThanLasso) {
    int better = 0;
    const int seeds = 50;
    ScenarioConfig sc = ScenarioConfig::preset("s1", 400, 50);
    for (int r = 0; r < seeds; ++r) {
        const Dataset data = generate_scenario(sc, r);
        const SieveDesign design = SieveDesign::build(data);
        CvSpec spec;
        spec.folds = 5;
        spec.seed = static_cast<std::uint64_t>(r) + 1;
        const CvResult lasso = cross_validate(design, data.y, sc.family, BaselineMethod::lasso, spec);
        const CvResult alasso = cross_validate(design, data.y, sc.family, BaselineMethod::adaptive_lasso, spec);
        const int fl = false_positives(lasso.best(design.blocks).beta, sc.beta0);
        const int fa = false_positives(alasso.best(design.blocks).beta, sc.beta0);
        better += fa < fl ? 1 : 0;
    }
    EXPECT_GE(better, 35) << better << " of " << seeds;
}

TEST(Folds, StratifiedPartition) {
    Eigen::VectorXd y(103);
    for (Eigen::Index i = 0; i < 103; ++i) y[i] = i % 3 == 0 ? 1.0 : 0.0;
    const auto fold = assign_folds(y, Family::logistic(), 10, 9);
    ASSERT_EQ(fold.size(), 103u);
    std::map<int, int> ones, total;
    for (std::size_t i = 0; i < fold.size(); ++i) {
        ASSERT_GE(fold[i], 0);
        ASSERT_LT(fold[i], 10);
        ++total[fold[i]];
        ones[fold[i]] += y[static_cast<Eigen::Index>(i)] > 0.5 ? 1 : 0;
    }
    const double share = y.mean();
    for (int k = 0; k < 10; ++k) {
        EXPECT_GT(total[k], 0);
        EXPECT_LE(std::abs(ones[k] - share * total[k]), 1.0 + 1e-12) << "fold " << k;
    }
    EXPECT_EQ(assign_folds(y, Family::logistic(), 10, 9), fold);
}

TEST(CrossValidate, SingletonGrid) {
    const Dataset data = small_dataset(100, 5, Eigen::VectorXd::Constant(5, 0.5), Family::logistic(), 6);
    const SieveDesign design = SieveDesign::build(data);
    CvSpec spec;
    spec.folds = 5;
    spec.grid = {0.7};
    const CvResult r = cross_validate(design, data.y, Family::logistic(), BaselineMethod::lasso, spec);
    EXPECT_EQ(r.best_lambda, 0.7);
    EXPECT_EQ(r.lambdas.size(), 1u);
}

TEST(CrossValidate, BestNoWorseThanNull) {
    const Dataset data = small_dataset(200, 10, Eigen::VectorXd::LinSpaced(10, -1.0, 1.0), Family::logistic(), 7);
    const SieveDesign design = SieveDesign::build(data);
    CvSpec spec;
    spec.folds = 5;
    const CvResult r = cross_validate(design, data.y, Family::logistic(), BaselineMethod::lasso, spec);
    EXPECT_GE(r.mean_deviance.front(), r.mean_deviance[r.best_index]);
    for (std::size_t k = 1; k < r.lambdas.size(); ++k) EXPECT_LT(r.lambdas[k], r.lambdas[k - 1]);
    for (double d : r.mean_deviance) EXPECT_GE(d, r.mean_deviance[r.best_index]);
}

TEST(CrossValidate, LeaveOneOutMatchesBruteForce) {
    for (const Family f : {Family::logistic(), Family::poisson()}) {
        const Dataset data = small_dataset(40, 4, Eigen::VectorXd::LinSpaced(4, -1.0, 1.0), f, 8);
        const SieveDesign design = SieveDesign::build(data);
        const std::vector<double> grid = geometric_grid(
            lambda_max(design, data.y, f, std::vector<double>(4, 1.0), tight()), 8, 0.05);
        CvSpec spec;
        spec.folds = 40;
        spec.grid = grid;
        spec.patience = 0;
        spec.stop.enabled = false;
        const CvResult r = cross_validate(design, data.y, f, BaselineMethod::lasso, spec, tight());
        ASSERT_EQ(r.lambdas.size(), grid.size());

        std::vector<double> brute(grid.size(), 0.0);
        for (Eigen::Index i = 0; i < 40; ++i) {
            std::vector<Eigen::Index> keep;
            for (Eigen::Index k = 0; k < 40; ++k)
                if (k != i) keep.push_back(k);
            const SieveDesign sub = design.take_rows(keep);
            Eigen::VectorXd ysub(39);
            for (Eigen::Index k = 0; k < 39; ++k) ysub[k] = data.y[keep[static_cast<std::size_t>(k)]];
            for (std::size_t l = 0; l < grid.size(); ++l) {
                const Eigen::VectorXd b = lasso_fit(sub, ysub, f, grid[l], tight()).flatten();
                brute[l] += f.deviance_term(data.y[i], design.columns.row(i).dot(b)) / 40.0;
            }
        }
        for (std::size_t l = 0; l < grid.size(); ++l) EXPECT_NEAR(r.mean_deviance[l], brute[l], 1e-6) << f.name() << " " << l;
        const std::size_t best = static_cast<std::size_t>(std::min_element(brute.begin(), brute.end()) - brute.begin());
        EXPECT_EQ(r.best_index, best);
    }
}

TEST(CrossValidate, TiesGoToLargerLambda) {
    // every lambda on this grid is above lambda_max, so all fits and deviances coincide
    const Dataset data = small_dataset(60, 3, Eigen::VectorXd::Zero(3), Family::logistic(), 9);
    const SieveDesign design = SieveDesign::build(data);
    const double lmax = lambda_max(design, data.y, Family::logistic(), std::vector<double>(3, 1.0));
    CvSpec spec;
    spec.folds = 3;
    spec.grid = {lmax * 40, lmax * 30, lmax * 20};
    spec.stop.enabled = false;
    const CvResult r = cross_validate(design, data.y, Family::logistic(), BaselineMethod::lasso, spec, tight());
    ASSERT_EQ(r.mean_deviance.size(), 3u);
    EXPECT_NEAR(r.mean_deviance[0], r.mean_deviance[2], 1e-10);
    EXPECT_NEAR(r.mean_deviance[1], r.mean_deviance[2], 1e-10);
    EXPECT_EQ(r.best_index, 0u);
}

TEST(CrossValidate, SingleClassTrainingSetFails) {
    const Dataset base = small_dataset(20, 2, Eigen::VectorXd::Zero(2), Family::logistic(), 10);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(20);
    y[3] = 1.0;
    const SieveDesign design = SieveDesign::build(base);
    CvSpec spec;
    spec.folds = 2;
    spec.grid = {1.0};
    EXPECT_THROW(cross_validate(design, y, Family::logistic(), BaselineMethod::lasso, spec), std::runtime_error);
}

TEST(CrossValidate, SpecValidation) {
    CvSpec s;
    s.folds = 1;
    EXPECT_THROW(s.validate(100), std::invalid_argument);
    s = {};
    EXPECT_THROW(s.validate(15), std::invalid_argument);
    s.grid = {1.0, 2.0};
    EXPECT_THROW(s.validate(100), std::invalid_argument);
    s = {};
    s.patience = -1;
    EXPECT_THROW(s.validate(100), std::invalid_argument);
}

TEST(CrossValidate, NullThresholdWithinOneStep) {
    const Dataset data = small_dataset(200, 10, Eigen::VectorXd::LinSpaced(10, -0.6, 0.6), Family::logistic(), 11);
    const SieveDesign design = SieveDesign::build(data);
    const std::vector<double> w(10, 1.0);
    const double lmax = lambda_max(design, data.y, Family::logistic(), w, tight());
    const auto grid = geometric_grid(lmax, 100, 1e-3);
    PathStop none;
    none.enabled = false;
    const std::vector<double> head(grid.begin(), grid.begin() + 5);
    const LassoPath path = lasso_path(design, data.y, Family::logistic(), head, w, tight(), none);
    EXPECT_TRUE(support_of(path.coefficients[0].tail(10)).empty());
    EXPECT_FALSE(support_of(path.coefficients[1].tail(10)).empty());
}
