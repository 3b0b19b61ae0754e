#pragma once

#include "gplmbar/bar.hpp"
#include "gplmbar/baselines.hpp"
#include "gplmbar/design.hpp"
#include "gplmbar/family.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gplmbar {

/// Value of a registered true nonlinear effect: psi1..psi4 and psi4_poisson.
double psi_true(std::string_view name, double z);
/// Generator domain of a registered effect.
BasisSpec psi_domain(std::string_view name, int degree = 3);

struct ScenarioConfig {
    std::string name = "custom";
    Eigen::Index n = 600;
    Eigen::Index p = 300;
    /// AR(1) correlation of the penalized covariates.
    double rho = 0.25;
    Eigen::VectorXd beta0;
    Eigen::VectorXd alpha0;
    /// Registered effect names, one per continuous covariate.
    std::vector<std::string> psi;
    Family family = Family::logistic();
    int replications = 200;
    std::uint64_t seed = 1;
    int degree = 3;

    /// "s1", "s2" or "s4" at the given size.
    static ScenarioConfig preset(std::string_view name, Eigen::Index n, Eigen::Index p);
    static std::vector<std::string> preset_names();

    void validate() const;
    Eigen::MatrixXd sigma_x() const;
    int signal_count() const;
};

/// Deterministic in (config.seed, replication); each block draws from its own stream.
Dataset generate_scenario(const ScenarioConfig& config, int replication);

struct SelectionMetrics {
    int tp = 0;
    int fp = 0;
    int ms = 0;
    int mc = 0;
    bool tm = false;
    double mse = 0.0;
};

SelectionMetrics evaluate_selection(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth,
                                    const Eigen::MatrixXd& sigma);

enum class ScenarioMethod { bar_aic, bar_bic, lasso, alasso, oracle };

ScenarioMethod parse_method(std::string_view name);
std::string to_string(ScenarioMethod method);

/// Fits one method on one dataset; the oracle refits without penalty on the true support.
CoefficientBlocks fit_method(ScenarioMethod method, const SieveDesign& design, const Eigen::VectorXd& y,
                             const Family& family, const Eigen::VectorXd& true_beta, std::uint64_t cv_seed,
                             const CvSpec& cv = {}, const CcdControls& ccd = {}, bool* converged = nullptr);

struct MethodSummary {
    std::string method;
    double mmse = 0.0;
    double mmse_sd = 0.0;
    double tp = 0.0;
    double fp = 0.0;
    double ms = 0.0;
    double mc = 0.0;
    double tm = 0.0;
    int r_effective = 0;
    int failures = 0;
};

struct ReplicationRecord {
    int replication = 0;
    std::string method;
    bool ok = false;
    bool converged = false;
    std::string error;
    SelectionMetrics metrics;
    CoefficientBlocks coefficients;
};

/// Averaged centred curve estimate for one continuous covariate.
struct CurveEstimate {
    BasisSpec spec;
    std::vector<double> grid;
    std::vector<double> mean;
    int fits = 0;
};

struct CurveFit {
    Eigen::VectorXd gamma;
    std::vector<BasisSpec> specs;
};

/// Pointwise mean of the centred effect estimates across fits, per component.
std::vector<CurveEstimate> estimate_curves(std::span<const CurveFit> fits, int grid_points);

struct StudyOptions {
    int threads = 0;
    CvSpec cv;
    CcdControls ccd;
    int curve_points = 200;
};

struct StudyResult {
    ScenarioConfig config;
    std::vector<ScenarioMethod> methods;
    std::vector<MethodSummary> summaries;
    MethodSummary oracle;
    /// Replication-major, one record per (replication, method) with the oracle last.
    std::vector<ReplicationRecord> records;
    /// curves[m][j]: method m (same order as `methods`), component j.
    std::vector<std::vector<CurveEstimate>> curves;

    const MethodSummary& summary(ScenarioMethod m) const;
    const std::vector<CurveEstimate>& curves_for(ScenarioMethod m) const;
};

MethodSummary summarize(const std::string& method, std::span<const ReplicationRecord> records);

StudyResult run_replications(const ScenarioConfig& config, const std::vector<ScenarioMethod>& methods, int replications,
                             const StudyOptions& options = {});

}  // namespace gplmbar
