#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gplmbar {

/// Raised when a computation produces or receives a non-finite value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FamilyKind { logistic, poisson };

/// Exponential family with canonical link and unit dispersion.
class Family {
public:
    constexpr explicit Family(FamilyKind kind = FamilyKind::logistic) : kind_(kind) {}

    static constexpr Family logistic() { return Family(FamilyKind::logistic); }
    static constexpr Family poisson() { return Family(FamilyKind::poisson); }
    /// Accepts "logistic"/"binomial" and "poisson".
    static Family parse(std::string_view name);

    FamilyKind kind() const { return kind_; }
    std::string name() const;

    /// Upper clip applied to the Poisson linear predictor before exponentiating.
    static constexpr double poisson_eta_cap = 30.0;

    /// Inverse link. Logistic uses the sign-split stable form.
    double mean(double eta) const;
    /// b''(theta) expressed through the mean.
    double variance(double mu) const;
    /// Per-observation log-likelihood up to terms free of eta.
    double log_likelihood_term(double y, double eta) const;
    /// Per-observation deviance contribution 2 [l(y; y) - l(y; eta)].
    double deviance_term(double y, double eta) const;
    /// True if the linear predictor is clipped for this family.
    bool clips(double eta) const { return kind_ == FamilyKind::poisson && eta > poisson_eta_cap; }

    friend bool operator==(const Family&, const Family&) = default;

private:
    FamilyKind kind_;
};

/// Linear predictor, fitted means and response of one fit in progress.
/// Invariant: mu_i == family.mean(eta_i) for every i.
class WorkingState {
public:
    WorkingState(Family family, Eigen::VectorXd y, Eigen::VectorXd eta);
    /// Starts from eta = 0.
    WorkingState(Family family, Eigen::VectorXd y);

    const Family& family() const { return family_; }
    const Eigen::VectorXd& y() const { return y_; }
    const Eigen::VectorXd& eta() const { return eta_; }
    const Eigen::VectorXd& mu() const { return mu_; }
    Eigen::Index size() const { return y_.size(); }

    /// eta += delta * column, then refresh mu on the touched rows.
    void apply_step(const Eigen::Ref<const Eigen::VectorXd>& column, double delta);
    /// Replace eta wholesale and recompute mu.
    void reset(Eigen::VectorXd eta);

    /// Number of rows whose Poisson predictor hit the clip since construction.
    std::size_t clipped_rows() const { return clipped_; }

private:
    void refresh(Eigen::Index i);

    Family family_;
    Eigen::VectorXd y_;
    Eigen::VectorXd eta_;
    Eigen::VectorXd mu_;
    std::size_t clipped_ = 0;
};

double log_likelihood(const WorkingState& state);
inline double log_likelihood(const Family& family, const WorkingState& state) {
    if (!(family == state.family())) throw std::invalid_argument("family does not match working state");
    return log_likelihood(state);
}

/// Total deviance of the state's fitted means.
double deviance(const WorkingState& state);

struct Derivatives {
    double first = 0.0;
    double second = 0.0;
};

/// First and second derivative of the negative log-likelihood along `column`.
Derivatives coordinate_derivatives(const WorkingState& state,
                                   const Eigen::Ref<const Eigen::VectorXd>& column);

}  // namespace gplmbar
