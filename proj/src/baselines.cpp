#include "gplmbar/baselines.hpp"

#include "gplmbar/random.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gplmbar {

namespace {

constexpr double kPilotZero = 1e-8;

std::vector<double> unit_weights(const BlockMap& map) {
    return std::vector<double>(static_cast<std::size_t>(map.beta_count), 1.0);
}

PenaltyMap frozen_beta(const BlockMap& map) { return beta_only_penalty(map, ColumnPenalty::frozen()); }

}  // namespace

BaselineMethod parse_baseline(std::string_view name) {
    if (name == "lasso") return BaselineMethod::lasso;
    if (name == "alasso" || name == "adaptive-lasso" || name == "adaptive_lasso") return BaselineMethod::adaptive_lasso;
    throw std::invalid_argument("unknown baseline '" + std::string(name) + "' (expected lasso or alasso)");
}

PenaltyMap weighted_l1_penalty(const BlockMap& map, double lambda, const std::vector<double>& weights) {
    if (static_cast<Eigen::Index>(weights.size()) != map.beta_count) {
        throw std::invalid_argument("one penalty weight is required per penalized column");
    }
    PenaltyMap pen(static_cast<std::size_t>(map.total()), ColumnPenalty::none());
    for (Eigen::Index j = 0; j < map.beta_count; ++j) {
        const double w = weights[static_cast<std::size_t>(j)];
        pen[static_cast<std::size_t>(map.beta_begin() + j)] =
            std::isinf(w) ? ColumnPenalty::frozen() : ColumnPenalty::l1(lambda * w);
    }
    return pen;
}

CoefficientBlocks lasso_fit(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                            double lambda, const CcdControls& ccd) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
    const PenaltyMap pen = weighted_l1_penalty(design.blocks, lambda, unit_weights(design.blocks));
    const CcdResult r = ccd_fit(design.columns, y, family, pen, ccd, Eigen::VectorXd::Zero(design.blocks.total()));
    return CoefficientBlocks::from_flat(r.coefficients, design.blocks);
}

CoefficientBlocks ridge_pilot(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family, double xi,
                              const CcdControls& ccd) {
    const PenaltyMap pen = beta_only_penalty(design.blocks, ColumnPenalty::ridge(xi));
    const CcdResult r = ccd_fit(design.columns, y, family, pen, ccd, Eigen::VectorXd::Zero(design.blocks.total()));
    return CoefficientBlocks::from_flat(r.coefficients, design.blocks);
}

std::vector<double> adaptive_weights(const Eigen::VectorXd& pilot_beta) {
    std::vector<double> w(static_cast<std::size_t>(pilot_beta.size()));
    for (Eigen::Index j = 0; j < pilot_beta.size(); ++j) {
        const double b = std::abs(pilot_beta[j]);
        w[static_cast<std::size_t>(j)] = b < kPilotZero ? std::numeric_limits<double>::infinity() : 1.0 / b;
    }
    return w;
}

CoefficientBlocks adaptive_lasso_fit(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                                     double lambda, const CoefficientBlocks& pilot, const CcdControls& ccd) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
    if (!pilot.matches(design.blocks)) throw std::invalid_argument("pilot does not match design");
    const PenaltyMap pen = weighted_l1_penalty(design.blocks, lambda, adaptive_weights(pilot.beta));
    const CcdResult r = ccd_fit(design.columns, y, family, pen, ccd, Eigen::VectorXd::Zero(design.blocks.total()));
    return CoefficientBlocks::from_flat(r.coefficients, design.blocks);
}

CoefficientBlocks null_fit(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                           const CcdControls& ccd) {
    const CcdResult r =
        ccd_fit(design.columns, y, family, frozen_beta(design.blocks), ccd, Eigen::VectorXd::Zero(design.blocks.total()));
    return CoefficientBlocks::from_flat(r.coefficients, design.blocks);
}

double lambda_max(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                  const std::vector<double>& weights, const CcdControls& ccd) {
    const CoefficientBlocks base = null_fit(design, y, family, ccd);
    const Eigen::VectorXd grad = likelihood_gradient(design.columns, y, family, base.flatten());
    double best = 0.0;
    for (Eigen::Index j = 0; j < design.blocks.beta_count; ++j) {
        const double w = weights[static_cast<std::size_t>(j)];
        if (std::isinf(w) || w <= 0.0) continue;
        // d(-2l) = 2 d(-l); the penalty is 2 lambda w |b|
        best = std::max(best, std::abs(grad[design.blocks.beta_begin() + j]) / (2.0 * w));
    }
    // rounding in the null fit can leave the entering column a hair above zero at exactly best
    return best * (1.0 + 1e-10);
}

std::vector<double> geometric_grid(double lmax, int length, double min_ratio) {
    if (length < 1) throw std::invalid_argument("grid length must be at least 1");
    if (!(min_ratio > 0.0 && min_ratio < 1.0)) throw std::invalid_argument("grid ratio must be in (0, 1)");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(length));
    if (length == 1) return {lmax};
    for (int i = 0; i < length; ++i) grid.push_back(lmax * std::pow(min_ratio, static_cast<double>(i) / (length - 1)));
    return grid;
}

LassoPath lasso_path(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                     const std::vector<double>& grid, const std::vector<double>& weights, const CcdControls& ccd,
                     const PathStop& stop) {
    LassoPath path;
    const BlockMap& map = design.blocks;
    const CcdResult base =
        ccd_fit(design.columns, y, family, frozen_beta(map), ccd, Eigen::VectorXd::Zero(map.total()));
    const double null_dev = deviance(WorkingState(family, y, design.columns * base.coefficients));

    Eigen::VectorXd warm = base.coefficients;
    double last_ratio = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const PenaltyMap pen = weighted_l1_penalty(map, grid[k], weights);
        const CcdResult r = ccd_fit(design.columns, y, family, pen, ccd, warm);
        warm = r.coefficients;
        path.lambdas.push_back(grid[k]);
        path.coefficients.push_back(r.coefficients);
        path.converged.push_back(r.converged);
        if (!stop.enabled || null_dev <= 0.0) continue;
        const double dev = deviance(WorkingState(family, y, design.columns * r.coefficients));
        const double ratio = 1.0 - dev / null_dev;
        if (ratio >= stop.max_deviance_ratio) break;
        if (k > 0 && ratio - last_ratio < stop.min_ratio_change * ratio) break;
        last_ratio = ratio;
    }
    return path;
}

void CvSpec::validate(Eigen::Index n) const {
    if (folds < 2) throw std::invalid_argument("need at least 2 folds");
    if (n < 2 * folds && folds != n) {
        std::ostringstream msg;
        msg << "cross-validation with " << folds << " folds needs at least " << 2 * folds << " rows, got " << n;
        throw std::invalid_argument(msg.str());
    }
    if (patience < 0) throw std::invalid_argument("patience must be non-negative");
    if (grid.empty()) {
        if (grid_length < 1) throw std::invalid_argument("grid length must be at least 1");
    } else {
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] < grid[i - 1])) throw std::invalid_argument("lambda grid must be strictly decreasing");
    }
}

std::vector<int> assign_folds(const Eigen::VectorXd& y, const Family& family, int folds, std::uint64_t seed) {
    const Eigen::Index n = y.size();
    std::vector<int> fold(static_cast<std::size_t>(n), 0);
    Engine rng = make_stream(seed, 0xf01d);
    std::vector<std::vector<Eigen::Index>> strata;
    if (family.kind() == FamilyKind::logistic) {
        strata.resize(2);
        for (Eigen::Index i = 0; i < n; ++i) strata[y[i] > 0.5 ? 1 : 0].push_back(i);
    } else {
        strata.emplace_back();
        for (Eigen::Index i = 0; i < n; ++i) strata[0].push_back(i);
    }
    std::size_t counter = 0;
    for (auto& stratum : strata) {
        shuffle_in_place(stratum, rng);
        for (Eigen::Index i : stratum) fold[static_cast<std::size_t>(i)] = static_cast<int>(counter++ % static_cast<std::size_t>(folds));
    }
    return fold;
}

double mean_deviance(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                     const Eigen::VectorXd& coefficients, const std::vector<Eigen::Index>& rows) {
    if (rows.empty()) return 0.0;
    double total = 0.0;
    for (Eigen::Index i : rows) {
        const double eta = design.columns.row(i).dot(coefficients);
        total += family.deviance_term(y[i], eta);
    }
    return total / static_cast<double>(rows.size());
}

CvResult cross_validate(const SieveDesign& design, const Eigen::VectorXd& y, const Family& family,
                        BaselineMethod method, const CvSpec& spec, const CcdControls& ccd) {
    const Eigen::Index n = y.size();
    spec.validate(n);
    const BlockMap& map = design.blocks;

    CvResult out;
    out.weights = method == BaselineMethod::lasso ? unit_weights(map)
                                                   : adaptive_weights(ridge_pilot(design, y, family, 1.0, ccd).beta);
    std::vector<double> grid = spec.grid;
    if (grid.empty()) {
        const double lmax = lambda_max(design, y, family, out.weights, ccd);
        grid = geometric_grid(lmax > 0.0 ? lmax : 1.0, spec.grid_length, spec.min_ratio);
    }

    // Each training complement must contain both classes for a binary response.
    std::vector<int> fold;
    std::vector<std::vector<Eigen::Index>> train, test;
    bool ok = false;
    for (int attempt = 0; attempt < 5 && !ok; ++attempt) {
        out.fold_attempts = attempt + 1;
        fold = assign_folds(y, family, spec.folds, spec.seed + static_cast<std::uint64_t>(attempt));
        train.assign(static_cast<std::size_t>(spec.folds), {});
        test.assign(static_cast<std::size_t>(spec.folds), {});
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto f = static_cast<std::size_t>(fold[static_cast<std::size_t>(i)]);
            for (std::size_t k = 0; k < train.size(); ++k) (k == f ? test[k] : train[k]).push_back(i);
        }
        ok = true;
        for (std::size_t k = 0; k < train.size(); ++k) {
            if (test[k].empty()) ok = false;
            if (family.kind() != FamilyKind::logistic) continue;
            bool has0 = false, has1 = false;
            for (Eigen::Index i : train[k]) (y[i] > 0.5 ? has1 : has0) = true;
            if (!(has0 && has1)) ok = false;
        }
    }
    if (!ok) throw std::runtime_error("could not form folds whose training sets contain both response classes");

    struct FoldFit {
        SieveDesign design;
        Eigen::VectorXd y;
        Eigen::VectorXd warm;
    };
    std::vector<FoldFit> folds;
    folds.reserve(train.size());
    for (const auto& rows : train) {
        FoldFit f;
        f.design = design.take_rows(rows);
        f.y.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) f.y[static_cast<Eigen::Index>(r)] = y[rows[r]];
        f.warm = null_fit(f.design, f.y, family, ccd).flatten();
        folds.push_back(std::move(f));
    }

    // Full data and every fold walk the grid together so the walk can stop once
    // the held-out deviance has clearly turned upward.
    Eigen::VectorXd warm = null_fit(design, y, family, ccd).flatten();
    const double null_dev = deviance(WorkingState(family, y, design.columns * warm));
    double last_ratio = 0.0;
    int worse = 0;
    for (std::size_t l = 0; l < grid.size(); ++l) {
        const PenaltyMap pen = weighted_l1_penalty(map, grid[l], out.weights);
        const CcdResult full = ccd_fit(design.columns, y, family, pen, ccd, warm);
        warm = full.coefficients;
        out.full_path.lambdas.push_back(grid[l]);
        out.full_path.coefficients.push_back(full.coefficients);
        out.full_path.converged.push_back(full.converged);

        double cv = 0.0;
        for (std::size_t k = 0; k < folds.size(); ++k) {
            FoldFit& f = folds[k];
            f.warm = ccd_fit(f.design.columns, f.y, family, pen, ccd, f.warm).coefficients;
            cv += mean_deviance(design, y, family, f.warm, test[k]);
        }
        out.mean_deviance.push_back(cv / static_cast<double>(folds.size()));

        const std::size_t best = static_cast<std::size_t>(
            std::min_element(out.mean_deviance.begin(), out.mean_deviance.end()) - out.mean_deviance.begin());
        worse = best == l ? 0 : worse + 1;
        if (spec.patience > 0 && worse >= spec.patience) break;
        if (!spec.stop.enabled || null_dev <= 0.0) continue;
        const double ratio = 1.0 - deviance(WorkingState(family, y, design.columns * full.coefficients)) / null_dev;
        if (ratio >= spec.stop.max_deviance_ratio) break;
        if (l > 0 && ratio - last_ratio < spec.stop.min_ratio_change * ratio) break;
        last_ratio = ratio;
    }
    out.lambdas = out.full_path.lambdas;

    // ties resolve toward the larger lambda; differences inside the solver tolerance are ties
    out.best_index = 0;
    for (std::size_t l = 1; l < out.lambdas.size(); ++l) {
        const double incumbent = out.mean_deviance[out.best_index];
        if (out.mean_deviance[l] < incumbent - 10.0 * ccd.tolerance * (1.0 + std::abs(incumbent))) out.best_index = l;
    }
    out.best_lambda = out.lambdas[out.best_index];
    return out;
}

}  // namespace gplmbar
