#include "gplmbar/family.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gplmbar {

namespace {

double softplus(double eta) {
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

void require_finite(double eta, Eigen::Index i) {
    if (!std::isfinite(eta)) {
        std::ostringstream msg;
        msg << "non-finite linear predictor at row " << i;
        throw NumericError(msg.str());
    }
}

}  // namespace

Family Family::parse(std::string_view name) {
    if (name == "logistic" || name == "binomial") return logistic();
    if (name == "poisson") return poisson();
    throw std::invalid_argument("unknown family '" + std::string(name) + "' (expected logistic or poisson)");
}

std::string Family::name() const { return kind_ == FamilyKind::logistic ? "logistic" : "poisson"; }

double Family::mean(double eta) const {
    if (kind_ == FamilyKind::logistic) {
        if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
        const double e = std::exp(eta);
        return e / (1.0 + e);
    }
    return std::exp(std::min(eta, poisson_eta_cap));
}

double Family::variance(double mu) const {
    return kind_ == FamilyKind::logistic ? mu * (1.0 - mu) : mu;
}

double Family::log_likelihood_term(double y, double eta) const {
    if (kind_ == FamilyKind::logistic) return y * eta - softplus(eta);
    return y * eta - mean(eta);
}

double Family::deviance_term(double y, double eta) const {
    if (kind_ == FamilyKind::logistic) {
        // saturated log-likelihood is zero for binary y
        return -2.0 * log_likelihood_term(y, eta);
    }
    const double sat = y > 0.0 ? y * std::log(y) - y : 0.0;
    return 2.0 * (sat - log_likelihood_term(y, eta));
}

WorkingState::WorkingState(Family family, Eigen::VectorXd y, Eigen::VectorXd eta)
    : family_(family), y_(std::move(y)), eta_(std::move(eta)) {
    if (y_.size() != eta_.size()) throw std::invalid_argument("response and linear predictor lengths differ");
    mu_.resize(eta_.size());
    for (Eigen::Index i = 0; i < eta_.size(); ++i) refresh(i);
}

WorkingState::WorkingState(Family family, Eigen::VectorXd y)
    : WorkingState(family, y, Eigen::VectorXd::Zero(y.size())) {}

void WorkingState::refresh(Eigen::Index i) {
    require_finite(eta_[i], i);
    if (family_.clips(eta_[i])) ++clipped_;
    mu_[i] = family_.mean(eta_[i]);
}

void WorkingState::apply_step(const Eigen::Ref<const Eigen::VectorXd>& column, double delta) {
    if (!std::isfinite(delta)) throw NumericError("non-finite coordinate step");
    if (delta == 0.0) return;
    if (column.size() != eta_.size()) throw std::invalid_argument("column length does not match state");
    for (Eigen::Index i = 0; i < eta_.size(); ++i) {
        const double c = column[i];
        if (c == 0.0) continue;
        eta_[i] += delta * c;
        refresh(i);
    }
}

void WorkingState::reset(Eigen::VectorXd eta) {
    if (eta.size() != y_.size()) throw std::invalid_argument("linear predictor length does not match state");
    eta_ = std::move(eta);
    for (Eigen::Index i = 0; i < eta_.size(); ++i) refresh(i);
}

double log_likelihood(const WorkingState& state) {
    const Family& fam = state.family();
    const auto& eta = state.eta();
    const auto& y = state.y();
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        require_finite(eta[i], i);
        total += fam.log_likelihood_term(y[i], eta[i]);
    }
    return total;
}

double deviance(const WorkingState& state) {
    const Family& fam = state.family();
    double total = 0.0;
    for (Eigen::Index i = 0; i < state.size(); ++i) total += fam.deviance_term(state.y()[i], state.eta()[i]);
    return total;
}

Derivatives coordinate_derivatives(const WorkingState& state,
                                   const Eigen::Ref<const Eigen::VectorXd>& column) {
    if (column.size() != state.size()) throw std::invalid_argument("column length does not match state");
    const auto& mu = state.mu();
    const auto& y = state.y();
    Derivatives d;
    if (state.family().kind() == FamilyKind::logistic) {
        for (Eigen::Index i = 0; i < column.size(); ++i) {
            const double c = column[i];
            d.first -= c * (y[i] - mu[i]);
            d.second += c * c * mu[i] * (1.0 - mu[i]);
        }
    } else {
        for (Eigen::Index i = 0; i < column.size(); ++i) {
            const double c = column[i];
            d.first -= c * (y[i] - mu[i]);
            d.second += c * c * mu[i];
        }
    }
    if (!std::isfinite(d.first) || !std::isfinite(d.second)) throw NumericError("non-finite coordinate derivative");
    return d;
}

}  // namespace gplmbar
