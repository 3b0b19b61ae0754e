#include "gplmbar/ccd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace gplmbar {

ColumnPenalty ColumnPenalty::ridge(double xi) {
    if (!(xi > 0.0)) throw std::invalid_argument("ridge precision must be positive");
    return {PenaltyKind::ridge, xi, 0.0};
}

ColumnPenalty ColumnPenalty::bar_weight(double lambda, double previous) {
    if (!(lambda > 0.0)) throw std::invalid_argument("BAR lambda must be positive");
    if (previous == 0.0 || !std::isfinite(previous)) {
        throw std::invalid_argument("BAR weight needs a finite nonzero previous estimate");
    }
    return {PenaltyKind::bar_weight, lambda, previous};
}

ColumnPenalty ColumnPenalty::l1(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("L1 lambda must be non-negative");
    return {PenaltyKind::l1, lambda, 0.0};
}

double ColumnPenalty::quadratic_weight() const {
    switch (kind) {
        case PenaltyKind::ridge: return strength;
        case PenaltyKind::bar_weight: return strength / (previous * previous);
        default: return 0.0;
    }
}

double ColumnPenalty::value(double b) const {
    switch (kind) {
        case PenaltyKind::ridge:
        case PenaltyKind::bar_weight: return quadratic_weight() * b * b;
        case PenaltyKind::l1: return 2.0 * strength * std::abs(b);
        default: return 0.0;
    }
}

PenaltyMap beta_only_penalty(const BlockMap& map, const ColumnPenalty& beta_penalty) {
    PenaltyMap pen(static_cast<std::size_t>(map.total()), ColumnPenalty::none());
    for (Eigen::Index j = map.beta_begin(); j < map.total(); ++j) pen[static_cast<std::size_t>(j)] = beta_penalty;
    return pen;
}

void CcdControls::validate() const {
    if (max_passes < 1) throw std::invalid_argument("max_passes must be at least 1");
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (!(gradient_tolerance > 0.0)) throw std::invalid_argument("gradient tolerance must be positive");
    if (!(initial_trust_region > 0.0)) throw std::invalid_argument("trust region must be positive");
    if (!(trust_shrink > 0.0 && trust_shrink < 1.0)) throw std::invalid_argument("trust shrink must be in (0, 1)");
    if (!(trust_grow >= 1.0)) throw std::invalid_argument("trust grow must be >= 1");
}

double penalized_objective(const WorkingState& state, const Eigen::VectorXd& coefficients,
                           const PenaltyMap& penalty) {
    if (static_cast<Eigen::Index>(penalty.size()) != coefficients.size()) {
        throw std::invalid_argument("penalty map does not match coefficient vector");
    }
    double obj = -2.0 * log_likelihood(state);
    for (Eigen::Index j = 0; j < coefficients.size(); ++j) obj += penalty[static_cast<std::size_t>(j)].value(coefficients[j]);
    return obj;
}

namespace {

// Smallest trust region the adaptive rule may shrink to.
constexpr double kTrustFloor = 1e-4;

struct CurvatureInfo {
    double gradient = 0.0;   // d(-2l)/db
    double curvature = 0.0;  // d2(-2l)/db2 at the current point
    double bound = 0.0;      // upper bound of the curvature within the trust region
};

// One fused pass over the rows: gradient, curvature, and an upper bound of the
// curvature for every point within `radius` of the current coefficient.
CurvatureInfo column_curvature(const WorkingState& state, const Eigen::Ref<const Eigen::VectorXd>& column,
                               double radius, double column_max_abs) {
    const auto& mu = state.mu();
    const auto& y = state.y();
    const double growth = std::exp(std::min(radius * column_max_abs, 700.0));
    CurvatureInfo info;
    double g = 0.0, h = 0.0, hb = 0.0;
    if (state.family().kind() == FamilyKind::logistic) {
        for (Eigen::Index i = 0; i < column.size(); ++i) {
            const double c = column[i];
            const double v = mu[i] * (1.0 - mu[i]);
            g -= c * (y[i] - mu[i]);
            h += c * c * v;
            hb += c * c * std::min(0.25, v * growth);
        }
    } else {
        for (Eigen::Index i = 0; i < column.size(); ++i) {
            const double c = column[i];
            g -= c * (y[i] - mu[i]);
            h += c * c * mu[i];
        }
        hb = h * growth;
    }
    info.gradient = 2.0 * g;
    info.curvature = 2.0 * h;
    info.bound = 2.0 * hb;
    if (!std::isfinite(info.gradient) || !std::isfinite(info.curvature)) {
        throw NumericError("non-finite coordinate derivative");
    }
    if (!std::isfinite(info.bound)) info.bound = std::numeric_limits<double>::max();
    return info;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

CoordinateStep update_column(Eigen::Index j, const Eigen::MatrixXd& design, Eigen::VectorXd& coefficients,
                             WorkingState& state, const ColumnPenalty& pen, double& trust_region,
                             double column_max_abs, const CcdControls& controls) {
    CoordinateStep out;
    const double b = coefficients[j];
    out.value = b;
    if (pen.kind == PenaltyKind::frozen) {
        if (b != 0.0) {
            state.apply_step(design.col(j), -b);
            coefficients[j] = 0.0;
            out.delta = -b;
            out.value = 0.0;
        }
        return out;
    }

    const CurvatureInfo info = column_curvature(state, design.col(j), trust_region, column_max_abs);
    double g = info.gradient;
    double h = info.curvature;
    double hb = info.bound;
    double step = 0.0;

    if (pen.kind == PenaltyKind::l1) {
        const double t = 2.0 * pen.strength;
        out.violation = (b == 0.0 ? std::max(0.0, std::abs(g) - t) : std::abs(g + t * (b > 0 ? 1.0 : -1.0))) / (1.0 + h);
        if (hb <= 0.0) {
            out.skipped = out.violation > 0.0;
            return out;
        }
        step = soft_threshold(hb * b - g, t) / hb - b;
    } else {
        const double w = pen.quadratic_weight();
        g += 2.0 * w * b;
        h += 2.0 * w;
        hb += 2.0 * w;
        out.violation = std::abs(g) / (1.0 + h);
        if (hb <= 0.0 || g == 0.0) {
            // an all-zero column cannot move the objective
            out.skipped = g != 0.0;
            return out;
        }
        step = -g / hb;
    }

    if (std::abs(step) > trust_region) step = std::copysign(trust_region, step);
    if (pen.kind == PenaltyKind::l1 && b != 0.0 && (b + step) * b < 0.0) step = -b;
    if (!std::isfinite(step)) throw NumericError("non-finite coordinate step");

    if (step != 0.0) {
        state.apply_step(design.col(j), step);
        coefficients[j] = b + step;
    }
    out.value = coefficients[j];
    out.delta = step;
    trust_region = std::max({controls.trust_grow * std::abs(step), controls.trust_shrink * trust_region, kTrustFloor});
    return out;
}

}  // namespace

CoordinateStep newton_coordinate_update(Eigen::Index j, const Eigen::MatrixXd& design,
                                        Eigen::VectorXd& coefficients, WorkingState& state,
                                        const PenaltyMap& penalty, double& trust_region,
                                        const CcdControls& controls) {
    if (j < 0 || j >= design.cols()) throw std::out_of_range("column index out of range");
    const double cmax = design.col(j).cwiseAbs().maxCoeff();
    return update_column(j, design, coefficients, state, penalty[static_cast<std::size_t>(j)], trust_region, cmax,
                         controls);
}

namespace {

// Orthonormal reparametrization of the unpenalized columns, scaled to unit RMS.
// The objective does not depend on how that block is parametrized, so the sweep
// runs on Q * sqrt(n) and maps back through the triangular factor at the end.
struct FreeBlock {
    std::vector<Eigen::Index> columns;
    Eigen::MatrixXd r;  // original = r^{-1} * transformed
    bool active = false;
};

FreeBlock orthonormalize_free(const Eigen::MatrixXd& design, const PenaltyMap& penalty, Eigen::MatrixXd& work) {
    FreeBlock fb;
    for (Eigen::Index j = 0; j < design.cols(); ++j)
        if (penalty[static_cast<std::size_t>(j)].kind == PenaltyKind::none) fb.columns.push_back(j);
    const auto k = static_cast<Eigen::Index>(fb.columns.size());
    const Eigen::Index n = design.rows();
    if (k < 2 || n <= k) return fb;
    Eigen::MatrixXd block(n, k);
    for (Eigen::Index c = 0; c < k; ++c) block.col(c) = design.col(fb.columns[static_cast<std::size_t>(c)]);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(block);
    Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const double scale = r.diagonal().cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || r.diagonal().cwiseAbs().minCoeff() <= 1e-10 * scale) return fb;
    const double root_n = std::sqrt(static_cast<double>(n));
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
    work = design;
    for (Eigen::Index c = 0; c < k; ++c) work.col(fb.columns[static_cast<std::size_t>(c)]) = q.col(c) * root_n;
    fb.r = r / root_n;
    fb.active = true;
    return fb;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) out[static_cast<Eigen::Index>(c)] = v[idx[c]];
    return out;
}

void scatter(Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx, const Eigen::VectorXd& values) {
    for (std::size_t c = 0; c < idx.size(); ++c) v[idx[c]] = values[static_cast<Eigen::Index>(c)];
}

}  // namespace

CcdResult ccd_fit(const Eigen::MatrixXd& original, const Eigen::VectorXd& y, const Family& family,
                  const PenaltyMap& penalty, const CcdControls& controls,
                  const Eigen::VectorXd& warm_start) {
    controls.validate();
    const Eigen::Index cols = original.cols();
    if (original.rows() != y.size()) throw std::invalid_argument("design and response lengths differ");
    if (warm_start.size() != cols) throw std::invalid_argument("warm start does not match design width");
    if (static_cast<Eigen::Index>(penalty.size()) != cols) throw std::invalid_argument("penalty map does not match design width");

    CcdResult result;
    result.coefficients = warm_start;
    for (Eigen::Index j = 0; j < cols; ++j)
        if (penalty[static_cast<std::size_t>(j)].kind == PenaltyKind::frozen) result.coefficients[j] = 0.0;

    Eigen::MatrixXd transformed;
    const FreeBlock free_block = orthonormalize_free(original, penalty, transformed);
    const Eigen::MatrixXd& design = free_block.active ? transformed : original;
    if (free_block.active) {
        scatter(result.coefficients, free_block.columns,
                free_block.r.triangularView<Eigen::Upper>() * gather(result.coefficients, free_block.columns));
    }

    WorkingState state(family, y, design * result.coefficients);
    Eigen::VectorXd& coef = result.coefficients;

    std::vector<Eigen::Index> order;
    std::vector<double> cmax(static_cast<std::size_t>(cols), 0.0);
    bool has_l1 = false;
    for (Eigen::Index j = 0; j < cols; ++j) {
        const auto& pen = penalty[static_cast<std::size_t>(j)];
        if (pen.kind == PenaltyKind::frozen) continue;
        has_l1 = has_l1 || pen.kind == PenaltyKind::l1;
        order.push_back(j);
        cmax[static_cast<std::size_t>(j)] = design.rows() > 0 ? design.col(j).cwiseAbs().maxCoeff() : 0.0;
    }
    if (controls.reverse_order) std::reverse(order.begin(), order.end());
    std::vector<double> trust(static_cast<std::size_t>(cols), controls.initial_trust_region);

    auto sweep = [&](const std::vector<Eigen::Index>& columns) {
        double worst = 0.0;
        for (Eigen::Index j : columns) {
            const auto idx = static_cast<std::size_t>(j);
            const CoordinateStep s = update_column(j, design, coef, state, penalty[idx], trust[idx], cmax[idx], controls);
            if (s.skipped) ++result.skipped_updates;
            worst = std::max(worst, s.violation);
        }
        return worst;
    };
    auto small_change = [&](double before, double after) {
        return std::abs(before - after) <= controls.tolerance * (1.0 + std::abs(after));
    };

    double objective = penalized_objective(state, coef, penalty);
    while (result.passes < controls.max_passes) {
        const double worst = sweep(order);
        ++result.passes;
        const double next = penalized_objective(state, coef, penalty);
        result.objective_trace.push_back(next);
        const bool done = small_change(objective, next) && worst <= controls.gradient_tolerance;
        objective = next;
        if (done) {
            result.converged = true;
            break;
        }
        if (!controls.active_set || !has_l1) continue;

        std::vector<Eigen::Index> active;
        for (Eigen::Index j : order) {
            if (penalty[static_cast<std::size_t>(j)].kind != PenaltyKind::l1 || coef[j] != 0.0) active.push_back(j);
        }
        if (active.size() == order.size()) continue;
        while (result.passes < controls.max_passes) {
            const double inner_worst = sweep(active);
            ++result.passes;
            const double inner = penalized_objective(state, coef, penalty);
            const bool settled = small_change(objective, inner) && inner_worst <= controls.gradient_tolerance;
            objective = inner;
            if (settled) break;
        }
    }
    if (free_block.active) {
        const Eigen::VectorXd theta = gather(coef, free_block.columns);
        scatter(coef, free_block.columns, free_block.r.triangularView<Eigen::Upper>().solve(theta));
    }
    result.objective = objective;
    result.clipped_rows = state.clipped_rows();
    return result;
}

Eigen::VectorXd likelihood_gradient(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                    const Family& family, const Eigen::VectorXd& coefficients) {
    WorkingState state(family, y, design * coefficients);
    Eigen::VectorXd resid(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) resid[i] = y[i] - state.mu()[i];
    return -2.0 * (design.transpose() * resid);
}

}  // namespace gplmbar
