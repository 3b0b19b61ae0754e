#include "gplmbar/family.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace gplmbar;
using namespace testing_support;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST(Family, ParseAndName) {
    EXPECT_EQ(Family::parse("logistic"), Family::logistic());
    EXPECT_EQ(Family::parse("binomial"), Family::logistic());
    EXPECT_EQ(Family::parse("poisson"), Family::poisson());
    EXPECT_THROW(Family::parse("gamma"), std::invalid_argument);
    EXPECT_EQ(Family::poisson().name(), "poisson");
}

TEST(Family, LogLikelihoodAtZero) {
    const WorkingState s(Family::logistic(), vec({1, 0, 1, 1, 0}));
    EXPECT_NEAR(log_likelihood(s), -5.0 * std::log(2.0), 1e-14);
    const WorkingState p(Family::poisson(), Eigen::VectorXd::Zero(7));
    EXPECT_NEAR(log_likelihood(p), -7.0, 1e-14);
}

TEST(Family, ScalarLogisticLogLikelihood) {
    const WorkingState s(Family::logistic(), vec({1}), vec({2}));
    EXPECT_NEAR(log_likelihood(s), 2.0 - std::log1p(std::exp(2.0)), 1e-14);
    EXPECT_NEAR(log_likelihood(s), -0.126928, 1e-6);
}

TEST(Family, LogLikelihoodRejectsNonFinite) {
    const Eigen::VectorXd bad = vec({0, std::numeric_limits<double>::infinity()});
    EXPECT_THROW(WorkingState(Family::logistic(), vec({1, 0}), bad), NumericError);
    WorkingState s(Family::logistic(), vec({1, 0}));
    EXPECT_THROW(s.reset(bad), NumericError);
}

TEST(Family, StableLogisticMean) {
    const Family f = Family::logistic();
    EXPECT_EQ(f.mean(0.0), 0.5);
    EXPECT_GT(f.mean(-800.0), -1e-300);
    EXPECT_LE(f.mean(800.0), 1.0);
    EXPECT_TRUE(std::isfinite(f.log_likelihood_term(0.0, 800.0)));
    EXPECT_NEAR(f.log_likelihood_term(1.0, -800.0), -800.0, 1e-9);
}

TEST(Family, PoissonClip) {
    const Family f = Family::poisson();
    EXPECT_TRUE(f.clips(40.0));
    EXPECT_FALSE(f.clips(10.0));
    EXPECT_EQ(f.mean(40.0), std::exp(Family::poisson_eta_cap));
    WorkingState s(f, vec({1, 2}), vec({0, 35}));
    EXPECT_EQ(s.clipped_rows(), 1u);
}

TEST(Family, HandDerivatives) {
    const WorkingState s(Family::logistic(), vec({1, 0}));
    const Derivatives d = coordinate_derivatives(s, vec({1, 1}));
    EXPECT_NEAR(d.first, 0.0, 1e-15);
    EXPECT_NEAR(d.second, 0.5, 1e-15);
    for (const Family f : {Family::logistic(), Family::poisson()}) {
        const WorkingState t(f, vec({1, 0, 1}), vec({0.3, -1.0, 2.0}));
        const Derivatives z = coordinate_derivatives(t, Eigen::VectorXd::Zero(3));
        EXPECT_EQ(z.first, 0.0);
        EXPECT_EQ(z.second, 0.0);
    }
}

// central differences of -l along the column, 20 random instances per family
TEST(Family, DerivativesMatchFiniteDifferences) {
    for (const Family f : {Family::logistic(), Family::poisson()}) {
        for (int inst = 0; inst < 20; ++inst) {
            Engine rng = make_stream(99, static_cast<std::uint64_t>(inst), f.kind() == FamilyKind::poisson ? 1 : 0);
            const Eigen::MatrixXd m = normal_matrix(50, 2, rng);
            const Eigen::VectorXd eta = 0.7 * m.col(0);
            const Eigen::VectorXd col = m.col(1);
            const Eigen::VectorXd y = draw_response(eta, f, rng);
            const WorkingState s(f, y, eta);
            const Derivatives d = coordinate_derivatives(s, col);
            const double h = 1e-5;
            auto nll = [&](double t) { return -log_likelihood(WorkingState(f, y, eta + t * col)); };
            const double fd1 = (nll(h) - nll(-h)) / (2 * h);
            const double fd2 = (nll(h) - 2 * nll(0.0) + nll(-h)) / (h * h);
            EXPECT_LT(std::abs(d.first - fd1) / std::max(1.0, std::abs(fd1)), 1e-6) << f.name() << " instance " << inst;
            // the second difference carries O(eps / h^2) rounding, so use the first difference of the gradient
            auto grad = [&](double t) { return coordinate_derivatives(WorkingState(f, y, eta + t * col), col).first; };
            const double fd2g = (grad(h) - grad(-h)) / (2 * h);
            EXPECT_LT(std::abs(d.second - fd2g) / std::max(1.0, std::abs(fd2g)), 1e-6) << f.name() << " instance " << inst;
            EXPECT_LT(std::abs(d.second - fd2) / std::max(1.0, std::abs(fd2)), 1e-3);
            EXPECT_GE(d.second, 0.0);
        }
    }
}

TEST(WorkingState, StepRoundTrip) {
    Engine rng = make_stream(5, 0);
    const Eigen::MatrixXd m = normal_matrix(30, 1, rng);
    const Eigen::VectorXd y = draw_response(Eigen::VectorXd::Zero(30), Family::logistic(), rng);
    WorkingState s(Family::logistic(), y, m.col(0));
    const Eigen::VectorXd eta0 = s.eta();
    s.apply_step(m.col(0), 0.0);
    EXPECT_EQ(s.eta(), eta0);
    s.apply_step(m.col(0), 0.37);
    s.apply_step(m.col(0), -0.37);
    EXPECT_LT((s.eta() - eta0).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(s.apply_step(m.col(0), std::nan("")), NumericError);
}

TEST(WorkingState, IncrementalMatchesBatch) {
    for (const Family f : {Family::logistic(), Family::poisson()}) {
        Engine rng = make_stream(8, 1);
        const Eigen::MatrixXd cols = normal_matrix(40, 6, rng, 0.3);
        const Eigen::VectorXd y = draw_response(Eigen::VectorXd::Zero(40), f, rng);
        WorkingState s(f, y);
        boost::random::normal_distribution<double> step(0.0, 0.2);
        for (int k = 0; k < 100; ++k) s.apply_step(cols.col(k % 6), step(rng));
        const WorkingState batch(f, y, s.eta());
        EXPECT_LT((s.mu() - batch.mu()).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_NEAR(log_likelihood(s), log_likelihood(batch), 1e-10);
    }
}

TEST(Family, LogLikelihoodPermutationInvariant) {
    Engine rng = make_stream(3, 3);
    const Eigen::MatrixXd m = normal_matrix(25, 1, rng);
    const Eigen::VectorXd y = draw_response(m.col(0), Family::logistic(), rng);
    std::vector<Eigen::Index> perm(25);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle_in_place(perm, rng);
    Eigen::VectorXd yp(25), ep(25);
    for (Eigen::Index i = 0; i < 25; ++i) {
        yp[i] = y[perm[static_cast<std::size_t>(i)]];
        ep[i] = m(perm[static_cast<std::size_t>(i)], 0);
    }
    EXPECT_NEAR(log_likelihood(WorkingState(Family::logistic(), y, m.col(0))),
                log_likelihood(WorkingState(Family::logistic(), yp, ep)), 1e-12);
}

TEST(Family, DevianceZeroAtSaturation) {
    const Family p = Family::poisson();
    EXPECT_NEAR(p.deviance_term(3.0, std::log(3.0)), 0.0, 1e-14);
    EXPECT_NEAR(p.deviance_term(0.0, -50.0), 0.0, 1e-14);
    const Family l = Family::logistic();
    EXPECT_NEAR(l.deviance_term(1.0, 0.0), 2.0 * std::log(2.0), 1e-14);
}
