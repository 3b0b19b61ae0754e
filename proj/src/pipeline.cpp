#include "gplmbar/pipeline.hpp"

#include "gplmbar/ccd.hpp"
#include "gplmbar/parallel.hpp"
#include "gplmbar/random.hpp"

#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gplmbar {

std::vector<int> impute_column_means(Eigen::MatrixXd& x) {
    std::vector<int> missing(static_cast<std::size_t>(x.cols()), 0);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double sum = 0.0;
        int seen = 0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (std::isnan(x(i, j))) continue;
            sum += x(i, j);
            ++seen;
        }
        const int miss = static_cast<int>(x.rows()) - seen;
        missing[static_cast<std::size_t>(j)] = miss;
        if (miss == 0 || seen == 0) continue;
        const double mean = sum / seen;
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (std::isnan(x(i, j))) x(i, j) = mean;
    }
    return missing;
}

MafReport maf_filter(const Eigen::MatrixXd& genotypes, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 0.5)) throw std::invalid_argument("MAF threshold must be in [0, 0.5]");
    MafReport r;
    r.threshold = threshold;
    for (Eigen::Index j = 0; j < genotypes.cols(); ++j) {
        double sum = 0.0;
        int seen = 0;
        for (Eigen::Index i = 0; i < genotypes.rows(); ++i) {
            const double g = genotypes(i, j);
            if (std::isnan(g)) continue;
            if (g != 0.0 && g != 1.0 && g != 2.0) {
                std::ostringstream msg;
                msg << "genotype at row " << i << ", column " << j << " is " << g << "; expected 0, 1 or 2";
                throw std::invalid_argument(msg.str());
            }
            sum += g;
            ++seen;
        }
        r.missing.push_back(static_cast<int>(genotypes.rows()) - seen);
        if (seen == 0) {
            r.maf.push_back(std::numeric_limits<double>::quiet_NaN());
            r.all_missing.push_back(j);
            continue;
        }
        const double f = sum / seen / 2.0;
        const double maf = std::min(f, 1.0 - f);
        r.maf.push_back(maf);
        if (maf >= threshold) r.retained.push_back(j);
    }
    return r;
}

UnivariateResult univariate_test(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Family& family) {
    if (x.size() != y.size()) throw std::invalid_argument("column and response lengths differ");
    UnivariateResult r;
    const double lo = x.minCoeff();
    const double hi = x.maxCoeff();
    if (!(lo < hi)) {
        r.constant = true;
        r.p_value = 1.0;
        return r;
    }
    if (family.kind() == FamilyKind::logistic) {
        double max0 = -std::numeric_limits<double>::infinity(), min0 = std::numeric_limits<double>::infinity();
        double max1 = max0, min1 = min0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y[i] == 1.0) {
                max1 = std::max(max1, x[i]);
                min1 = std::min(min1, x[i]);
            } else {
                max0 = std::max(max0, x[i]);
                min0 = std::min(min0, x[i]);
            }
        }
        if (std::isinf(max0) || std::isinf(max1)) throw std::invalid_argument("screening needs both response classes");
        if (max0 <= min1 || max1 <= min0) {
            r.separated = true;
            r.converged = false;
            r.p_value = 0.0;
            r.coefficient = max0 <= min1 ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
            r.standard_error = std::numeric_limits<double>::infinity();
            return r;
        }
    }
    Eigen::MatrixXd design(x.size(), 2);
    design.col(0).setOnes();
    design.col(1) = x;
    const PenaltyMap pen(2, ColumnPenalty::none());
    CcdControls controls;
    controls.tolerance = 1e-12;
    controls.gradient_tolerance = 1e-8;
    const CcdResult fit = ccd_fit(design, y, family, pen, controls, Eigen::VectorXd::Zero(2));
    if (!fit.converged) {
        r.separated = true;
        r.converged = false;
        r.p_value = 0.0;
        r.coefficient = fit.coefficients[1];
        r.standard_error = std::numeric_limits<double>::infinity();
        return r;
    }
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double mu = family.mean(fit.coefficients[0] + fit.coefficients[1] * x[i]);
        const double v = family.variance(mu);
        s0 += v;
        s1 += v * x[i];
        s2 += v * x[i] * x[i];
    }
    const double det = s0 * s2 - s1 * s1;
    r.coefficient = fit.coefficients[1];
    if (!(det > 0.0)) {
        r.separated = true;
        r.converged = false;
        r.p_value = 0.0;
        r.standard_error = std::numeric_limits<double>::infinity();
        return r;
    }
    r.standard_error = std::sqrt(s0 / det);
    r.p_value = std::erfc(std::abs(r.coefficient / r.standard_error) / std::sqrt(2.0));
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
    return r;
}

namespace {

void screen_columns(const Dataset& data, const Family& family, const std::vector<Eigen::Index>& columns,
                    int threads, ScreenReport& report) {
    const Eigen::Index p = data.x.cols();
    report.univariate.assign(static_cast<std::size_t>(p), UnivariateResult{});
    report.tested.assign(static_cast<std::size_t>(p), false);
    parallel_for(columns.size(), resolve_threads(threads), [&](std::size_t k) {
        const Eigen::Index j = columns[k];
        report.univariate[static_cast<std::size_t>(j)] = univariate_test(data.x.col(j), data.y, family);
    });
    for (Eigen::Index j : columns) {
        const auto& u = report.univariate[static_cast<std::size_t>(j)];
        report.tested[static_cast<std::size_t>(j)] = true;
        if (u.constant) continue;
        if (u.separated) {
            std::ostringstream msg;
            msg << "column " << j << " separates the response; retained with p = 0";
            report.warnings.push_back(msg.str());
        }
        if (u.p_value < report.p_threshold || report.p_threshold >= 1.0) report.retained.push_back(j);
    }
}

}  // namespace

ScreenReport univariate_screen(const Dataset& data, const Family& family, double p_threshold, int threads) {
    if (!(p_threshold >= 0.0 && p_threshold <= 1.0)) throw std::invalid_argument("p-value threshold must be in [0, 1]");
    if (data.x.rows() != data.y.size()) throw std::invalid_argument("genotype rows do not match the response");
    ScreenReport report;
    report.p_threshold = p_threshold;
    report.maf.assign(static_cast<std::size_t>(data.x.cols()), std::numeric_limits<double>::quiet_NaN());
    report.missing.assign(static_cast<std::size_t>(data.x.cols()), 0);
    std::vector<Eigen::Index> all(static_cast<std::size_t>(data.x.cols()));
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) all[static_cast<std::size_t>(j)] = j;
    screen_columns(data, family, all, threads, report);
    return report;
}

ScreenReport screen_genotypes(Dataset& data, const Family& family, double maf_threshold, double p_threshold,
                              int threads) {
    if (!(p_threshold >= 0.0 && p_threshold <= 1.0)) throw std::invalid_argument("p-value threshold must be in [0, 1]");
    if (data.x.rows() != data.y.size()) throw std::invalid_argument("genotype rows do not match the response");
    const MafReport maf = maf_filter(data.x, maf_threshold);
    impute_column_means(data.x);
    ScreenReport report;
    report.maf_threshold = maf_threshold;
    report.p_threshold = p_threshold;
    report.maf = maf.maf;
    report.missing = maf.missing;
    for (Eigen::Index j : maf.all_missing) {
        std::ostringstream msg;
        msg << "column " << j << " has no observed genotypes; excluded";
        report.warnings.push_back(msg.str());
    }
    int imputed = 0;
    for (int m : maf.missing) imputed += m;
    if (imputed > 0) {
        std::ostringstream msg;
        msg << imputed << " missing genotypes mean-imputed";
        report.warnings.push_back(msg.str());
    }
    screen_columns(data, family, maf.retained, threads, report);
    return report;
}

Resampler stratified_resampler(const Eigen::VectorXd& y, const Family& family, std::uint64_t seed) {
    std::vector<std::vector<Eigen::Index>> strata;
    if (family.kind() == FamilyKind::logistic) {
        strata.resize(2);
        for (Eigen::Index i = 0; i < y.size(); ++i) strata[y[i] == 1.0 ? 1 : 0].push_back(i);
        std::erase_if(strata, [](const auto& s) { return s.empty(); });
    } else {
        strata.emplace_back(static_cast<std::size_t>(y.size()));
        for (Eigen::Index i = 0; i < y.size(); ++i) strata[0][static_cast<std::size_t>(i)] = i;
    }
    return [strata = std::move(strata), seed](int resample) {
        Engine rng = make_stream(seed, static_cast<std::uint64_t>(resample), 7);
        std::vector<Eigen::Index> rows;
        for (const auto& s : strata) {
            boost::random::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
            for (std::size_t k = 0; k < s.size(); ++k) rows.push_back(s[pick(rng)]);
        }
        std::sort(rows.begin(), rows.end());
        return rows;
    };
}

BootstrapResult bootstrap_se(const Dataset& data, const FitRecipe& recipe, int resamples, const Resampler& resampler,
                             int threads) {
    if (resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
    if (!recipe || !resampler) throw std::invalid_argument("bootstrap needs a fit recipe and a resampler");
    std::vector<Eigen::VectorXd> fits(static_cast<std::size_t>(resamples));
    std::vector<std::string> errors(static_cast<std::size_t>(resamples));
    CoefficientBlocks shape;
    parallel_for(static_cast<std::size_t>(resamples), resolve_threads(threads), [&](std::size_t b) {
        try {
            const std::vector<Eigen::Index> rows = resampler(static_cast<int>(b));
            fits[b] = recipe(data.subset(rows)).flatten();
        } catch (const std::exception& e) {
            errors[b] = e.what();
        }
    });

    BootstrapResult out;
    out.requested = resamples;
    Eigen::Index width = -1;
    std::vector<const Eigen::VectorXd*> ok;
    for (std::size_t b = 0; b < fits.size(); ++b) {
        if (!errors[b].empty()) {
            out.errors.push_back("resample " + std::to_string(b) + ": " + errors[b]);
            continue;
        }
        if (width < 0) width = fits[b].size();
        if (fits[b].size() != width) throw std::runtime_error("bootstrap fits have inconsistent coefficient counts");
        ok.push_back(&fits[b]);
    }
    out.effective = static_cast<int>(ok.size());
    if (ok.empty()) throw std::runtime_error("every bootstrap resample failed");

    BlockMap map;
    map.w_count = data.w.cols();
    map.beta_count = data.x.cols();
    map.gamma_count = width - 1 - map.w_count - map.beta_count;
    // shifted by the first fit so identical resamples give exactly zero spread
    const Eigen::VectorXd& origin = *ok.front();
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(width);
    for (const auto* f : ok) shift += *f - origin;
    shift /= static_cast<double>(ok.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(width);
    for (const auto* f : ok) var += (*f - origin - shift).array().square().matrix();
    if (ok.size() > 1) var /= static_cast<double>(ok.size() - 1);
    out.mean = CoefficientBlocks::from_flat(origin + shift, map);
    out.standard_error = CoefficientBlocks::from_flat(var.cwiseSqrt(), map);
    out.selection_frequency.assign(static_cast<std::size_t>(map.beta_count), 0.0);
    for (const auto* f : ok)
        for (Eigen::Index j = 0; j < map.beta_count; ++j)
            if ((*f)[map.beta_begin() + j] != 0.0) out.selection_frequency[static_cast<std::size_t>(j)] += 1.0;
    for (double& s : out.selection_frequency) s /= static_cast<double>(ok.size());
    return out;
}

}  // namespace gplmbar
