#include "gplmbar/bar.hpp"
#include "gplmbar/parallel.hpp"
#include "gplmbar/pipeline.hpp"
#include "gplmbar/simulate.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <boost/random/binomial_distribution.hpp>

#include <cmath>
#include <numeric>

using namespace gplmbar;
using namespace testing_support;

namespace {

Eigen::MatrixXd column(std::initializer_list<double> v) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index i = 0;
    for (double x : v) m(i++, 0) = x;
    return m;
}

Dataset genotype_panel(Eigen::Index n, Eigen::Index p, int signals, double effect, std::uint64_t seed) {
    Engine rng = make_stream(seed, 0, 11);
    boost::random::binomial_distribution<int, double> allele(2, 0.3);
    Dataset d;
    d.x.resize(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) d.x(i, j) = allele(rng);
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, -0.6 * signals * effect);
    for (int s = 0; s < signals; ++s) eta += effect * d.x.col(s);
    d.y = draw_response(eta, Family::logistic(), rng);
    d.fill_default_names();
    return d;
}

}  // namespace

TEST(Maf, Examples) {
    EXPECT_EQ(maf_filter(column({0, 0, 0, 0}), 0.1).maf[0], 0.0);
    EXPECT_TRUE(maf_filter(column({0, 0, 0, 0}), 0.1).retained.empty());
    const MafReport het = maf_filter(column({1, 1, 1, 1}), 0.1);
    EXPECT_EQ(het.maf[0], 0.5);
    EXPECT_EQ(het.retained.size(), 1u);
    const MafReport r = maf_filter(column({0, 0, 1, 2}), 0.1);
    EXPECT_DOUBLE_EQ(r.maf[0], 0.375);
    EXPECT_EQ(r.retained.size(), 1u);
}

TEST(Maf, RecodingInvariant) {
    const Dataset d = genotype_panel(200, 30, 0, 0.0, 1);
    const Eigen::MatrixXd flipped = (2.0 - d.x.array()).matrix();
    const MafReport a = maf_filter(d.x, 0.25), b = maf_filter(flipped, 0.25);
    for (std::size_t j = 0; j < a.maf.size(); ++j) EXPECT_NEAR(a.maf[j], b.maf[j], 1e-15);
    EXPECT_EQ(a.retained, b.retained);
}

TEST(Maf, MissingAndInvalid) {
    const double na = std::nan("");
    Eigen::MatrixXd g(4, 2);
    g << 0, na, 2, na, na, na, 2, na;
    const MafReport r = maf_filter(g, 0.1);
    EXPECT_EQ(r.missing, (std::vector<int>{1, 4}));
    EXPECT_EQ(r.all_missing, (std::vector<Eigen::Index>{1}));
    EXPECT_TRUE(std::isnan(r.maf[1]));
    EXPECT_NEAR(r.maf[0], 1.0 / 3.0, 1e-15);
    g(0, 0) = 3;
    EXPECT_THROW(maf_filter(g, 0.1), std::invalid_argument);
    EXPECT_THROW(maf_filter(column({0, 1}), 0.6), std::invalid_argument);
}

TEST(Impute, ColumnMeans) {
    const double na = std::nan("");
    Eigen::MatrixXd x(3, 3);
    x << 1, na, na, na, 2, na, 3, 4, na;
    const auto miss = impute_column_means(x);
    EXPECT_EQ(miss, (std::vector<int>{1, 1, 3}));
    EXPECT_EQ(x(1, 0), 2.0);
    EXPECT_EQ(x(0, 1), 3.0);
    EXPECT_TRUE(std::isnan(x(0, 2)));
}

TEST(Univariate, MatchesNewtonAndFisher) {
    for (const Family f : {Family::logistic(), Family::poisson()}) {
        Engine rng = make_stream(4, f.kind() == FamilyKind::poisson ? 1 : 0);
        const Eigen::MatrixXd x = normal_matrix(300, 1, rng);
        const Eigen::VectorXd y = draw_response((0.2 + 0.3 * x.col(0).array()).matrix(), f, rng);
        const UnivariateResult r = univariate_test(x.col(0), y, f);
        const Eigen::MatrixXd design = with_intercept(x);
        const Eigen::VectorXd b = newton_raphson(design, y, f);
        EXPECT_NEAR(r.coefficient, b[1], 1e-6);
        Eigen::VectorXd v(300);
        for (Eigen::Index i = 0; i < 300; ++i) v[i] = f.variance(f.mean(design.row(i).dot(b)));
        const Eigen::MatrixXd info = design.transpose() * v.asDiagonal() * design;
        const double se = std::sqrt(info.inverse()(1, 1));
        EXPECT_NEAR(r.standard_error, se, 1e-6);
        EXPECT_NEAR(r.p_value, std::erfc(std::abs(b[1] / se) / std::sqrt(2.0)), 1e-6);
        EXPECT_FALSE(r.separated);
    }
}

TEST(Univariate, ConstantAndSeparated) {
    Eigen::VectorXd y(6);
    y << 0, 1, 0, 1, 1, 0;
    const UnivariateResult c = univariate_test(Eigen::VectorXd::Constant(6, 2.0), y, Family::logistic());
    EXPECT_TRUE(c.constant);
    EXPECT_EQ(c.p_value, 1.0);
    const UnivariateResult s = univariate_test(y, y, Family::logistic());
    EXPECT_TRUE(s.separated);
    EXPECT_EQ(s.p_value, 0.0);

    Dataset d;
    d.y = y;
    d.x.resize(6, 2);
    d.x.col(0) = y;
    d.x.col(1).setConstant(1.0);
    const ScreenReport rep = univariate_screen(d, Family::logistic(), 0.1, 1);
    EXPECT_EQ(rep.retained, (std::vector<Eigen::Index>{0}));
    EXPECT_FALSE(rep.warnings.empty());
}

TEST(Univariate, NullSizeNearThreshold) {
    int retained = 0;
    const int seeds = 400;
    for (int s = 0; s < seeds; ++s) {
        Engine rng = make_stream(77, static_cast<std::uint64_t>(s));
        Dataset d;
        d.x = normal_matrix(1000, 1, rng);
        d.y = draw_response(Eigen::VectorXd::Zero(1000), Family::logistic(), rng);
        retained += univariate_screen(d, Family::logistic(), 0.1, 1).retained.size() == 1 ? 1 : 0;
    }
    const double rate = static_cast<double>(retained) / seeds;
    EXPECT_NEAR(rate, 0.1, 0.045) << rate;
}

TEST(Univariate, PowerOnPanel) {
    int all_found = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Dataset d = genotype_panel(600, 50, 5, 1.0, 500 + seed);
        const ScreenReport r = screen_genotypes(d, Family::logistic(), 0.1, 0.1, 1);
        int found = 0;
        for (Eigen::Index j : r.retained) found += j < 5 ? 1 : 0;
        all_found += found == 5 ? 1 : 0;
    }
    EXPECT_GE(all_found, 95);
}

TEST(Screen, DeterministicAcrossThreads) {
    Dataset a = genotype_panel(300, 40, 3, 0.8, 9), b = a;
    const ScreenReport ra = screen_genotypes(a, Family::logistic(), 0.1, 0.2, 1);
    const ScreenReport rb = screen_genotypes(b, Family::logistic(), 0.1, 0.2, 4);
    EXPECT_EQ(ra.retained, rb.retained);
    for (std::size_t j = 0; j < ra.univariate.size(); ++j) EXPECT_EQ(ra.univariate[j].p_value, rb.univariate[j].p_value);
}

TEST(Screen, ThresholdOneKeepsEveryTestedColumn) {
    Dataset d = genotype_panel(200, 20, 2, 0.5, 10);
    const ScreenReport r = screen_genotypes(d, Family::logistic(), 0.0, 1.0, 1);
    std::size_t nonconstant = 0;
    for (Eigen::Index j = 0; j < 20; ++j) nonconstant += d.x.col(j).minCoeff() < d.x.col(j).maxCoeff() ? 1 : 0;
    EXPECT_EQ(r.retained.size(), nonconstant);
    for (const auto& u : r.univariate) {
        EXPECT_GE(u.p_value, 0.0);
        EXPECT_LE(u.p_value, 1.0);
    }
}

TEST(Bootstrap, StratifiedResamplerKeepsClassCounts) {
    Eigen::VectorXd y(50);
    for (Eigen::Index i = 0; i < 50; ++i) y[i] = i < 12 ? 1.0 : 0.0;
    const Resampler rs = stratified_resampler(y, Family::logistic(), 3);
    for (int b = 0; b < 10; ++b) {
        const auto rows = rs(b);
        ASSERT_EQ(rows.size(), 50u);
        int ones = 0;
        for (Eigen::Index i : rows) ones += y[i] == 1.0 ? 1 : 0;
        EXPECT_EQ(ones, 12);
        EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
    }
    EXPECT_EQ(rs(4), stratified_resampler(y, Family::logistic(), 3)(4));
}

TEST(Bootstrap, IdenticalResamplesGiveZeroSe) {
    const Dataset data = small_dataset(150, 5, Eigen::VectorXd::Constant(5, 0.8), Family::logistic(), 12);
    std::vector<Eigen::Index> identity(150);
    std::iota(identity.begin(), identity.end(), 0);
    const FitRecipe recipe = [](const Dataset& d) {
        BarControls c;
        c.lambda = std::log(static_cast<double>(d.rows()));
        return bar_fit(d, Family::logistic(), c).coefficients;
    };
    const BootstrapResult r = bootstrap_se(data, recipe, 2, [&](int) { return identity; }, 2);
    EXPECT_EQ(r.effective, 2);
    EXPECT_EQ(r.standard_error.flatten().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(r.mean.flatten(), recipe(data).flatten());
}

TEST(Bootstrap, FailuresAreDropped) {
    const Dataset data = small_dataset(80, 3, Eigen::VectorXd::Constant(3, 0.8), Family::logistic(), 13);
    const FitRecipe recipe = [](const Dataset& d) {
        if (d.y.sum() == 0.0) throw std::runtime_error("unused");
        BarControls c;
        return bar_fit(d, Family::logistic(), c).coefficients;
    };
    const Resampler base = stratified_resampler(data.y, Family::logistic(), 5);
    const Resampler broken = [&](int b) {
        if (b == 1) throw std::runtime_error("broken resample");
        return base(b);
    };
    const BootstrapResult r = bootstrap_se(data, recipe, 5, broken, 1);
    EXPECT_EQ(r.requested, 5);
    EXPECT_EQ(r.effective, 4);
    ASSERT_EQ(r.errors.size(), 1u);
    EXPECT_EQ(r.selection_frequency.size(), 3u);
    EXPECT_THROW(bootstrap_se(data, recipe, 1, base, 1), std::invalid_argument);
}

TEST(Bootstrap, AlphaSeMatchesMonteCarloSpread) {
    const ScenarioConfig sc = ScenarioConfig::preset("s1", 600, 50);
    const FitRecipe recipe = [&](const Dataset& d) {
        BarControls c;
        c.lambda = std::log(static_cast<double>(d.rows()));
        return bar_fit(d, sc.family, c).coefficients;
    };
    const Dataset data = generate_scenario(sc, 0);
    const BootstrapResult boot = bootstrap_se(data, recipe, 50, stratified_resampler(data.y, sc.family, 21), 0);
    ASSERT_EQ(boot.effective, 50);

    std::vector<Eigen::VectorXd> alphas(50);
    ScenarioConfig fresh = sc;
    fresh.seed = 4242;
    parallel_for(50, resolve_threads(0), [&](std::size_t r) {
        alphas[r] = recipe(generate_scenario(fresh, static_cast<int>(r))).alpha;
    });
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(5), var = Eigen::VectorXd::Zero(5);
    for (const auto& a : alphas) mean += a;
    mean /= 50.0;
    for (const auto& a : alphas) var += (a - mean).array().square().matrix();
    const Eigen::VectorXd sd = (var / 49.0).cwiseSqrt();
    for (Eigen::Index j = 0; j < 5; ++j) {
        const double ratio = boot.standard_error.alpha[j] / sd[j];
        EXPECT_GT(ratio, 0.5) << "alpha " << j;
        EXPECT_LT(ratio, 2.0) << "alpha " << j;
    }
}
