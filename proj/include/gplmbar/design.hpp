#pragma once

#include "gplmbar/bernstein.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace gplmbar {

/// Response plus the three covariate blocks of a partly linear model:
/// penalized `x`, unpenalized linear `w`, nonparametric continuous `z`.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
    Eigen::MatrixXd w;
    Eigen::MatrixXd z;
    std::vector<BasisSpec> z_specs;

    std::vector<std::string> x_names;
    std::vector<std::string> w_names;
    std::vector<std::string> z_names;

    Eigen::Index rows() const { return y.size(); }
    /// Checks block heights and one basis spec per continuous covariate.
    void validate() const;
    /// Rows picked by index (repeats allowed). Basis specs are kept as-is.
    Dataset subset(std::span<const Eigen::Index> rows) const;
    /// Names for every column, filling blanks with x1.., w1.., z1...
    void fill_default_names();
};

/// Ranges [min, max] of each column of z with the given degree.
std::vector<BasisSpec> observed_specs(const Eigen::MatrixXd& z, int degree);

/// Column layout of the augmented design:
/// [intercept | w (alpha) | Bernstein bases of z (gamma) | x (beta)].
struct BlockMap {
    Eigen::Index w_count = 0;
    Eigen::Index gamma_count = 0;
    Eigen::Index beta_count = 0;

    static constexpr Eigen::Index intercept = 0;
    Eigen::Index w_begin() const { return 1; }
    Eigen::Index gamma_begin() const { return 1 + w_count; }
    Eigen::Index beta_begin() const { return 1 + w_count + gamma_count; }
    Eigen::Index total() const { return 1 + w_count + gamma_count + beta_count; }
    bool is_beta(Eigen::Index column) const { return column >= beta_begin(); }

    friend bool operator==(const BlockMap&, const BlockMap&) = default;
};

struct CoefficientBlocks {
    double intercept = 0.0;
    Eigen::VectorXd alpha;
    Eigen::VectorXd gamma;
    Eigen::VectorXd beta;

    static CoefficientBlocks zeros(const BlockMap& map);
    static CoefficientBlocks from_flat(const Eigen::VectorXd& flat, const BlockMap& map);
    Eigen::VectorXd flatten() const;
    bool matches(const BlockMap& map) const;
};

struct SieveDesign {
    Eigen::MatrixXd columns;
    BlockMap blocks;
    SieveBlock sieve;

    Eigen::Index rows() const { return columns.rows(); }

    static SieveDesign build(const Dataset& data);
    /// Same layout restricted to the given rows.
    SieveDesign take_rows(std::span<const Eigen::Index> picked) const;
};

/// Indices j with beta_j != 0.
std::vector<Eigen::Index> support_of(const Eigen::VectorXd& beta);

}  // namespace gplmbar
