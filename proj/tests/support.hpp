#pragma once

#include "gplmbar/ccd.hpp"
#include "gplmbar/design.hpp"
#include "gplmbar/family.hpp"
#include "gplmbar/random.hpp"

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace testing_support {

using gplmbar::Engine;
using gplmbar::Family;
using gplmbar::FamilyKind;

inline Eigen::MatrixXd normal_matrix(Eigen::Index n, Eigen::Index p, Engine& rng, double sd = 1.0) {
    boost::random::normal_distribution<double> z(0.0, sd);
    Eigen::MatrixXd m(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) m(i, j) = z(rng);
    return m;
}

inline Eigen::VectorXd draw_response(const Eigen::VectorXd& eta, const Family& family, Engine& rng) {
    Eigen::VectorXd y(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double mu = family.mean(eta[i]);
        if (family.kind() == FamilyKind::logistic) {
            y[i] = boost::random::bernoulli_distribution<double>(mu)(rng) ? 1.0 : 0.0;
        } else {
            y[i] = static_cast<double>(boost::random::poisson_distribution<long long, double>(mu)(rng));
        }
    }
    return y;
}

/// Intercept column followed by `p` standard normal columns.
inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd d(x.rows(), x.cols() + 1);
    d.col(0).setOnes();
    d.rightCols(x.cols()) = x;
    return d;
}

/// Negative log-likelihood summed over rows at coefficients b.
inline double negative_log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Family& family,
                                      const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = design * b;
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) s -= family.log_likelihood_term(y[i], eta[i]);
    return s;
}

/// Full-matrix Newton-Raphson for the unpenalized canonical-link GLM, with step halving.
inline Eigen::VectorXd newton_raphson(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Family& family,
                                      int max_iterations = 200) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(design.cols());
    double f = negative_log_likelihood(design, y, family, b);
    for (int it = 0; it < max_iterations; ++it) {
        const Eigen::VectorXd eta = design * b;
        Eigen::VectorXd mu(eta.size()), v(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            mu[i] = family.mean(eta[i]);
            v[i] = family.variance(mu[i]);
        }
        const Eigen::VectorXd grad = -design.transpose() * (y - mu);
        const Eigen::MatrixXd hess = design.transpose() * v.asDiagonal() * design;
        const Eigen::VectorXd step = hess.ldlt().solve(-grad);
        double t = 1.0;
        Eigen::VectorXd next = b + step;
        double fn = negative_log_likelihood(design, y, family, next);
        while (fn > f && t > 1e-10) {
            t *= 0.5;
            next = b + t * step;
            fn = negative_log_likelihood(design, y, family, next);
        }
        const double decrement = -grad.dot(step);
        if (fn <= f) {
            b = next;
            f = fn;
        }
        if (decrement < 1e-24 || fn > f) break;
    }
    const Eigen::VectorXd eta = design * b;
    Eigen::VectorXd mu(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) mu[i] = family.mean(eta[i]);
    if ((design.transpose() * (y - mu)).cwiseAbs().maxCoeff() > 1e-8 * static_cast<double>(y.size())) throw std::runtime_error("Newton oracle did not converge");
    return b;
}

/// Small partly linear dataset: x normal, one binary w, one uniform z on [0, 1].
inline gplmbar::Dataset small_dataset(Eigen::Index n, Eigen::Index p, const Eigen::VectorXd& beta, const Family& family,
                                      std::uint64_t seed, int degree = 3) {
    Engine rng = gplmbar::make_stream(seed, 17, 0);
    gplmbar::Dataset d;
    d.x = normal_matrix(n, p, rng);
    d.w.resize(n, 1);
    d.z.resize(n, 1);
    boost::random::bernoulli_distribution<double> coin(0.5);
    boost::random::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd eta(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.w(i, 0) = coin(rng) ? 1.0 : 0.0;
        d.z(i, 0) = u(rng);
        eta[i] = 0.3 * d.w(i, 0) + 0.4 * std::sin(2.0 * M_PI * d.z(i, 0));
    }
    eta += d.x * beta;
    if (family.kind() == FamilyKind::poisson) eta.array() *= 0.5;
    d.y = draw_response(eta, family, rng);
    d.z_specs = {gplmbar::BasisSpec{degree, 0.0, 1.0}};
    d.fill_default_names();
    return d;
}

}  // namespace testing_support
