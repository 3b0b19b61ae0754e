#pragma once

#include "gplmbar/design.hpp"
#include "gplmbar/family.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace gplmbar {

enum class PenaltyKind {
    none,
    ridge,       ///< xi * b^2
    bar_weight,  ///< lambda * b^2 / previous^2
    l1,          ///< 2 * lambda * |b|
    frozen,      ///< held at exactly zero, never updated
};

/// Penalty attached to one design column. All penalties live on the
/// -2 log-likelihood scale.
struct ColumnPenalty {
    PenaltyKind kind = PenaltyKind::none;
    double strength = 0.0;
    double previous = 0.0;

    static ColumnPenalty none() { return {}; }
    static ColumnPenalty ridge(double xi);
    static ColumnPenalty bar_weight(double lambda, double previous);
    static ColumnPenalty l1(double lambda);
    static ColumnPenalty frozen() { return {PenaltyKind::frozen, 0.0, 0.0}; }

    double value(double b) const;
    /// Quadratic coefficient c such that the smooth penalty equals c * b^2.
    double quadratic_weight() const;
    bool smooth() const { return kind == PenaltyKind::ridge || kind == PenaltyKind::bar_weight; }
};

using PenaltyMap = std::vector<ColumnPenalty>;

/// No penalty on intercept/alpha/gamma; `beta_penalty` on every beta column.
PenaltyMap beta_only_penalty(const BlockMap& map, const ColumnPenalty& beta_penalty);

struct CcdControls {
    int max_passes = 500;
    /// A pass converges when the objective moves by less than tolerance * (1 + |objective|) ...
    double tolerance = 1e-8;
    /// ... and every coordinate's scaled first-order violation |f'| / (1 + f'') is below this.
    double gradient_tolerance = 1e-5;
    double initial_trust_region = 1.0;
    double trust_shrink = 0.5;
    double trust_grow = 2.0;
    /// Sweep columns last-to-first.
    bool reverse_order = false;
    /// Between full sweeps, iterate only over nonzero or unpenalized columns.
    bool active_set = true;

    void validate() const;
};

struct CcdResult {
    Eigen::VectorXd coefficients;
    bool converged = false;
    int passes = 0;
    double objective = 0.0;
    /// Objective after each full sweep.
    std::vector<double> objective_trace;
    std::size_t skipped_updates = 0;
    std::size_t clipped_rows = 0;
};

/// -2 log-likelihood + sum of column penalties.
double penalized_objective(const WorkingState& state, const Eigen::VectorXd& coefficients,
                           const PenaltyMap& penalty);

struct CoordinateStep {
    double value = 0.0;
    double delta = 0.0;
    /// |f'| / (1 + f'') at the pre-update point (subgradient form for L1 columns).
    double violation = 0.0;
    bool skipped = false;
};

/// One clipped Newton (or soft-threshold for L1) update of column j. Updates
/// `coefficients`, `state` and the column's trust region in place.
CoordinateStep newton_coordinate_update(Eigen::Index j, const Eigen::MatrixXd& design,
                                        Eigen::VectorXd& coefficients, WorkingState& state,
                                        const PenaltyMap& penalty, double& trust_region,
                                        const CcdControls& controls);

/// Cyclic coordinate descent from `warm_start` over all design columns.
CcdResult ccd_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Family& family,
                  const PenaltyMap& penalty, const CcdControls& controls,
                  const Eigen::VectorXd& warm_start);

/// Derivative of -2 log-likelihood with respect to each listed column.
Eigen::VectorXd likelihood_gradient(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                    const Family& family, const Eigen::VectorXd& coefficients);

}  // namespace gplmbar
