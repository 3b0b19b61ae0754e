#include "gplmbar/simulate.hpp"

#include "gplmbar/parallel.hpp"
#include "gplmbar/random.hpp"

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gplmbar {

namespace {

enum StreamBlock : std::uint64_t { kStreamX = 1, kStreamW = 2, kStreamZ = 3, kStreamY = 4 };

Eigen::VectorXd sparse_beta(Eigen::Index p, std::initializer_list<double> head, std::initializer_list<double> tail) {
    const auto need = static_cast<Eigen::Index>(head.size() + tail.size());
    if (p < need) {
        std::ostringstream msg;
        msg << "preset needs p >= " << need << ", got " << p;
        throw std::invalid_argument(msg.str());
    }
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    Eigen::Index j = 0;
    for (double v : head) b[j++] = v;
    j = p - static_cast<Eigen::Index>(tail.size());
    for (double v : tail) b[j++] = v;
    return b;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double psi_true(std::string_view name, double z) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (name == "psi1") return 0.1 * (z - 3.0) * (z - 3.0);
    if (name == "psi2") return 0.2 * (std::cos(two_pi * z) + 1.0);
    if (name == "psi3") return 0.2 * std::sin(two_pi * z);
    if (name == "psi4") return 0.2 * std::pow(z + 1.0, 3);
    if (name == "psi4_poisson") return 0.1 * std::pow(z + 1.0, 3);
    throw std::invalid_argument("unknown effect '" + std::string(name) + "'");
}

BasisSpec psi_domain(std::string_view name, int degree) {
    if (name == "psi1") return {degree, 1.0, 5.0};
    if (name == "psi2" || name == "psi3") return {degree, 0.0, 1.0};
    if (name == "psi4" || name == "psi4_poisson") return {degree, -3.0, 1.0};
    throw std::invalid_argument("unknown effect '" + std::string(name) + "'");
}

ScenarioConfig ScenarioConfig::preset(std::string_view name, Eigen::Index n, Eigen::Index p) {
    ScenarioConfig c;
    c.name = std::string(name);
    c.n = n;
    c.p = p;
    c.rho = 0.25;
    c.psi = {"psi1", "psi2", "psi3", "psi4"};
    c.alpha0 = Eigen::VectorXd(5);
    if (name == "s1") {
        c.beta0 = sparse_beta(p, {1.0, -1.0}, {-1.0, 0.75, 0.75});
        c.alpha0 << 1.0, -0.5, -0.5, 0.75, -1.0;
    } else if (name == "s2") {
        c.beta0 = sparse_beta(p, {1.0, -0.5}, {-1.0, 0.4, 0.75});
        c.alpha0 << 1.0, -0.5, -0.5, 0.75, -1.0;
    } else if (name == "s4") {
        c.beta0 = sparse_beta(p, {1.0, -0.75}, {-1.0, 0.75, -0.75});
        c.alpha0 << 0.75, -0.5, -0.5, 0.75, -1.0;
        c.psi.back() = "psi4_poisson";
        c.family = Family::poisson();
    } else {
        std::ostringstream msg;
        msg << "unknown scenario preset '" << name << "' (valid:";
        for (const auto& s : preset_names()) msg << ' ' << s;
        msg << ')';
        throw std::invalid_argument(msg.str());
    }
    return c;
}

std::vector<std::string> ScenarioConfig::preset_names() { return {"s1", "s2", "s4"}; }

void ScenarioConfig::validate() const {
    if (n < 1 || p < 1) throw std::invalid_argument("scenario needs n >= 1 and p >= 1");
    if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("AR correlation must satisfy |rho| < 1");
    if (beta0.size() != p) throw std::invalid_argument("true beta length must equal p");
    if (degree < 1) throw std::invalid_argument("basis degree must be at least 1");
    for (const auto& name : psi) (void)psi_domain(name);
}

Eigen::MatrixXd ScenarioConfig::sigma_x() const {
    Eigen::MatrixXd s(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    return s;
}

int ScenarioConfig::signal_count() const {
    return static_cast<int>((beta0.array() != 0.0).count());
}

Dataset generate_scenario(const ScenarioConfig& config, int replication) {
    config.validate();
    const auto rep = static_cast<std::uint64_t>(replication);
    const Eigen::Index n = config.n;
    Dataset d;
    d.x.resize(n, config.p);
    d.w.resize(n, config.alpha0.size());
    d.z.resize(n, static_cast<Eigen::Index>(config.psi.size()));
    d.y.resize(n);

    // AR(1) rows through the lower-triangular factor of Sigma, column order 1..p:
    // x_1 = e_1, x_j = rho x_{j-1} + sqrt(1 - rho^2) e_j.
    {
        Engine rng = make_stream(config.seed, rep, kStreamX);
        boost::random::normal_distribution<double> normal(0.0, 1.0);
        const double scale = std::sqrt(1.0 - config.rho * config.rho);
        for (Eigen::Index i = 0; i < n; ++i) {
            double prev = 0.0;
            for (Eigen::Index j = 0; j < config.p; ++j) {
                const double e = normal(rng);
                prev = j == 0 ? e : config.rho * prev + scale * e;
                d.x(i, j) = prev;
            }
        }
    }
    {
        Engine rng = make_stream(config.seed, rep, kStreamW);
        boost::random::bernoulli_distribution<double> coin(0.5);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < d.w.cols(); ++j) d.w(i, j) = coin(rng) ? 1.0 : 0.0;
    }
    for (const auto& name : config.psi) d.z_specs.push_back(psi_domain(name, config.degree));
    {
        Engine rng = make_stream(config.seed, rep, kStreamZ);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d.z.cols(); ++j) {
                const BasisSpec& s = d.z_specs[static_cast<std::size_t>(j)];
                boost::random::uniform_real_distribution<double> u(s.lower, s.upper);
                d.z(i, j) = u(rng);
            }
        }
    }
    {
        Engine rng = make_stream(config.seed, rep, kStreamY);
        for (Eigen::Index i = 0; i < n; ++i) {
            double eta = d.x.row(i).dot(config.beta0);
            if (d.w.cols() > 0) eta += d.w.row(i).dot(config.alpha0);
            for (Eigen::Index j = 0; j < d.z.cols(); ++j) eta += psi_true(config.psi[static_cast<std::size_t>(j)], d.z(i, j));
            const double mu = config.family.mean(eta);
            if (config.family.kind() == FamilyKind::logistic) {
                boost::random::bernoulli_distribution<double> draw(mu);
                d.y[i] = draw(rng) ? 1.0 : 0.0;
            } else {
                boost::random::poisson_distribution<long long, double> draw(mu);
                d.y[i] = static_cast<double>(draw(rng));
            }
        }
    }
    d.z_names = config.psi;
    d.fill_default_names();
    return d;
}

SelectionMetrics evaluate_selection(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth,
                                    const Eigen::MatrixXd& sigma) {
    if (estimate.size() != truth.size()) throw std::invalid_argument("estimate and truth lengths differ");
    if (sigma.rows() != truth.size() || sigma.cols() != truth.size()) {
        throw std::invalid_argument("covariance does not match coefficient length");
    }
    SelectionMetrics m;
    int q = 0;
    for (Eigen::Index j = 0; j < truth.size(); ++j) {
        const bool selected = estimate[j] != 0.0;
        const bool signal = truth[j] != 0.0;
        q += signal;
        m.tp += selected && signal;
        m.fp += selected && !signal;
    }
    m.ms = m.tp + m.fp;
    m.mc = (q - m.tp) + m.fp;
    m.tm = m.mc == 0;
    const Eigen::VectorXd diff = estimate - truth;
    m.mse = diff.dot(sigma * diff);
    return m;
}

ScenarioMethod parse_method(std::string_view name) {
    if (name == "bar-aic") return ScenarioMethod::bar_aic;
    if (name == "bar-bic") return ScenarioMethod::bar_bic;
    if (name == "lasso") return ScenarioMethod::lasso;
    if (name == "alasso") return ScenarioMethod::alasso;
    if (name == "oracle") return ScenarioMethod::oracle;
    throw std::invalid_argument("unknown method '" + std::string(name) +
                                "' (valid: bar-aic bar-bic lasso alasso oracle)");
}

std::string to_string(ScenarioMethod method) {
    switch (method) {
        case ScenarioMethod::bar_aic: return "bar-aic";
        case ScenarioMethod::bar_bic: return "bar-bic";
        case ScenarioMethod::lasso: return "lasso";
        case ScenarioMethod::alasso: return "alasso";
        case ScenarioMethod::oracle: return "oracle";
    }
    return "?";
}

CoefficientBlocks fit_method(ScenarioMethod method, const SieveDesign& design, const Eigen::VectorXd& y,
                             const Family& family, const Eigen::VectorXd& true_beta, std::uint64_t cv_seed,
                             const CvSpec& cv, const CcdControls& ccd, bool* converged) {
    bool ok = true;
    CoefficientBlocks out;
    switch (method) {
        case ScenarioMethod::bar_aic:
        case ScenarioMethod::bar_bic: {
            BarControls c;
            c.lambda = select_lambda_fixed(method == ScenarioMethod::bar_aic ? LambdaCriterion::aic : LambdaCriterion::bic,
                                           static_cast<double>(y.size()));
            FitResult fit = bar_fit(design, y, family, c, ccd);
            ok = fit.converged;
            out = std::move(fit.coefficients);
            break;
        }
        case ScenarioMethod::lasso:
        case ScenarioMethod::alasso: {
            CvSpec spec = cv;
            spec.seed = cv_seed;
            const CvResult r = cross_validate(
                design, y, family, method == ScenarioMethod::lasso ? BaselineMethod::lasso : BaselineMethod::adaptive_lasso,
                spec, ccd);
            out = r.best(design.blocks);
            ok = r.full_path.converged[r.best_index];
            break;
        }
        case ScenarioMethod::oracle: {
            if (true_beta.size() != design.blocks.beta_count) throw std::invalid_argument("true beta does not match design");
            PenaltyMap pen(static_cast<std::size_t>(design.blocks.total()), ColumnPenalty::none());
            for (Eigen::Index j = 0; j < true_beta.size(); ++j)
                if (true_beta[j] == 0.0) pen[static_cast<std::size_t>(design.blocks.beta_begin() + j)] = ColumnPenalty::frozen();
            const CcdResult r = ccd_fit(design.columns, y, family, pen, ccd, Eigen::VectorXd::Zero(design.blocks.total()));
            ok = r.converged;
            out = CoefficientBlocks::from_flat(r.coefficients, design.blocks);
            break;
        }
    }
    if (converged) *converged = ok;
    return out;
}

std::vector<CurveEstimate> estimate_curves(std::span<const CurveFit> fits, int grid_points) {
    if (fits.empty()) throw std::invalid_argument("no fits to average");
    const auto& specs = fits.front().specs;
    Eigen::Index expected = 0;
    for (const auto& s : specs) expected += s.degree;
    for (const auto& f : fits) {
        bool same = f.specs.size() == specs.size();
        for (std::size_t j = 0; same && j < specs.size(); ++j) {
            same = f.specs[j].degree == specs[j].degree && f.specs[j].lower == specs[j].lower &&
                   f.specs[j].upper == specs[j].upper;
        }
        if (!same) throw std::invalid_argument("fits do not share the same basis specs");
        if (f.gamma.size() != expected) throw std::invalid_argument("gamma length does not match basis specs");
    }
    std::vector<CurveEstimate> out;
    Eigen::Index offset = 0;
    for (const auto& spec : specs) {
        CurveEstimate c;
        c.spec = spec;
        c.grid = uniform_grid(spec, grid_points);
        c.mean.assign(c.grid.size(), 0.0);
        for (const auto& f : fits) {
            const auto vals = evaluate_psi(std::span<const double>(f.gamma.data() + offset, static_cast<std::size_t>(spec.degree)),
                                           spec, c.grid);
            for (std::size_t k = 0; k < vals.size(); ++k) c.mean[k] += vals[k];
        }
        for (double& v : c.mean) v /= static_cast<double>(fits.size());
        c.fits = static_cast<int>(fits.size());
        offset += spec.degree;
        out.push_back(std::move(c));
    }
    return out;
}

MethodSummary summarize(const std::string& method, std::span<const ReplicationRecord> records) {
    MethodSummary s;
    s.method = method;
    std::vector<double> mses;
    for (const auto& r : records) {
        if (r.method != method) continue;
        if (!r.ok) {
            ++s.failures;
            continue;
        }
        mses.push_back(r.metrics.mse);
        s.tp += r.metrics.tp;
        s.fp += r.metrics.fp;
        s.ms += r.metrics.ms;
        s.mc += r.metrics.mc;
        s.tm += r.metrics.tm ? 1.0 : 0.0;
    }
    s.r_effective = static_cast<int>(mses.size());
    if (s.r_effective > 0) {
        const double r = s.r_effective;
        s.tp /= r;
        s.fp /= r;
        s.ms /= r;
        s.mc /= r;
        s.tm /= r;
        s.mmse = median(mses);
        s.mmse_sd = sample_sd(mses);
    }
    return s;
}

const MethodSummary& StudyResult::summary(ScenarioMethod m) const {
    for (std::size_t k = 0; k < methods.size(); ++k)
        if (methods[k] == m) return summaries[k];
    if (m == ScenarioMethod::oracle) return oracle;
    throw std::invalid_argument("method not part of this study: " + to_string(m));
}

const std::vector<CurveEstimate>& StudyResult::curves_for(ScenarioMethod m) const {
    for (std::size_t k = 0; k < methods.size(); ++k)
        if (methods[k] == m) return curves[k];
    throw std::invalid_argument("method not part of this study: " + to_string(m));
}

StudyResult run_replications(const ScenarioConfig& config, const std::vector<ScenarioMethod>& methods, int replications,
                             const StudyOptions& options) {
    if (replications < 1) throw std::invalid_argument("need at least one replication");
    config.validate();
    StudyResult result;
    result.config = config;
    result.methods = methods;

    std::vector<ScenarioMethod> fitted = methods;
    fitted.erase(std::remove(fitted.begin(), fitted.end(), ScenarioMethod::oracle), fitted.end());
    fitted.push_back(ScenarioMethod::oracle);

    const Eigen::MatrixXd sigma = config.sigma_x();
    const std::size_t per_rep = fitted.size();
    std::vector<ReplicationRecord> records(static_cast<std::size_t>(replications) * per_rep);

    parallel_for(static_cast<std::size_t>(replications), resolve_threads(options.threads), [&](std::size_t r) {
        const int rep = static_cast<int>(r);
        for (std::size_t k = 0; k < per_rep; ++k) {
            auto& rec = records[r * per_rep + k];
            rec.replication = rep;
            rec.method = to_string(fitted[k]);
        }
        SieveDesign design;
        Dataset data;
        try {
            data = generate_scenario(config, rep);
            design = SieveDesign::build(data);
        } catch (const std::exception& e) {
            for (std::size_t k = 0; k < per_rep; ++k) records[r * per_rep + k].error = e.what();
            return;
        }
        for (std::size_t k = 0; k < per_rep; ++k) {
            auto& rec = records[r * per_rep + k];
            try {
                const std::uint64_t cv_seed = splitmix64(config.seed ^ (0x5eedULL + r));
                rec.coefficients = fit_method(fitted[k], design, data.y, config.family, config.beta0, cv_seed, options.cv,
                                              options.ccd, &rec.converged);
                rec.metrics = evaluate_selection(rec.coefficients.beta, config.beta0, sigma);
                rec.ok = true;
            } catch (const std::exception& e) {
                rec.error = e.what();
            }
        }
    });

    result.records = std::move(records);
    for (ScenarioMethod m : methods) result.summaries.push_back(summarize(to_string(m), result.records));
    result.oracle = summarize(to_string(ScenarioMethod::oracle), result.records);

    std::vector<BasisSpec> specs;
    for (const auto& name : config.psi) specs.push_back(psi_domain(name, config.degree));
    for (ScenarioMethod m : methods) {
        std::vector<CurveFit> fits;
        for (const auto& rec : result.records)
            if (rec.ok && rec.method == to_string(m)) fits.push_back({rec.coefficients.gamma, specs});
        result.curves.push_back(fits.empty() || specs.empty() ? std::vector<CurveEstimate>{}
                                                              : estimate_curves(fits, options.curve_points));
    }
    return result;
}

}  // namespace gplmbar
