#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gplmbar {

/// Raised when a value falls outside the support of a basis or design.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Degree and support [lower, upper] of one Bernstein polynomial family.
struct BasisSpec {
    int degree = 3;
    double lower = 0.0;
    double upper = 1.0;

    double midpoint() const { return 0.5 * (lower + upper); }
    bool contains(double z) const { return z >= lower && z <= upper; }

    /// Throws std::invalid_argument unless degree >= 1 and lower < upper.
    void validate() const;
};

/// C(m, k) t^k (1 - t)^(m - k) with t = (z - lower) / (upper - lower).
double bernstein_basis(double z, int k, const BasisSpec& spec);

/// Basis evaluations for the continuous covariates, one column per retained
/// basis function. The k = 0 function of every component is dropped: the
/// bases sum to one, so it is confounded with the model intercept.
struct SieveBlock {
    std::vector<BasisSpec> specs;
    Eigen::MatrixXd basis;
    /// component_of_column[c] is the covariate index that column c expands.
    std::vector<int> component_of_column;
    /// First column of each component; size specs.size() + 1.
    std::vector<Eigen::Index> component_offset;

    Eigen::Index columns_of(std::size_t component) const {
        return component_offset[component + 1] - component_offset[component];
    }
};

SieveBlock build_sieve_block(const Eigen::MatrixXd& z, std::span<const BasisSpec> specs);

/// psi(z) = sum_{k=1..m} gamma_k B_k(z), shifted so that psi(midpoint) = 0.
std::vector<double> evaluate_psi(std::span<const double> gamma, const BasisSpec& spec,
                                 std::span<const double> grid);

/// `count` equally spaced points covering [lower, upper].
std::vector<double> uniform_grid(const BasisSpec& spec, int count);

}  // namespace gplmbar
