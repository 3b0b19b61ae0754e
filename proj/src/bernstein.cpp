#include "gplmbar/bernstein.hpp"

#include <cmath>
#include <sstream>

namespace gplmbar {

namespace {

double binomial(int m, int k) {
    if (k > m - k) k = m - k;
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * static_cast<double>(m - k + i) / static_cast<double>(i);
    return c;
}

double basis_unchecked(double z, int k, const BasisSpec& spec) {
    const double t = (z - spec.lower) / (spec.upper - spec.lower);
    const int m = spec.degree;
    return binomial(m, k) * std::pow(t, k) * std::pow(1.0 - t, m - k);
}

}  // namespace

void BasisSpec::validate() const {
    if (degree < 1) throw std::invalid_argument("basis degree must be at least 1");
    if (!(lower < upper)) {
        std::ostringstream msg;
        msg << "basis range requires lower < upper, got [" << lower << ", " << upper << "]";
        throw std::invalid_argument(msg.str());
    }
}

double bernstein_basis(double z, int k, const BasisSpec& spec) {
    spec.validate();
    if (k < 0 || k > spec.degree) {
        std::ostringstream msg;
        msg << "basis index " << k << " outside 0.." << spec.degree;
        throw std::invalid_argument(msg.str());
    }
    if (!spec.contains(z)) {
        std::ostringstream msg;
        msg << "value " << z << " outside basis range [" << spec.lower << ", " << spec.upper << "]";
        throw DomainError(msg.str());
    }
    return basis_unchecked(z, k, spec);
}

SieveBlock build_sieve_block(const Eigen::MatrixXd& z, std::span<const BasisSpec> specs) {
    if (static_cast<Eigen::Index>(specs.size()) != z.cols()) {
        throw std::invalid_argument("one basis spec is required per continuous covariate");
    }
    SieveBlock block;
    block.specs.assign(specs.begin(), specs.end());
    block.component_offset.push_back(0);
    for (std::size_t j = 0; j < specs.size(); ++j) {
        specs[j].validate();
        block.component_offset.push_back(block.component_offset.back() + specs[j].degree);
        for (int k = 1; k <= specs[j].degree; ++k) block.component_of_column.push_back(static_cast<int>(j));
    }
    block.basis.resize(z.rows(), block.component_offset.back());
    for (std::size_t j = 0; j < specs.size(); ++j) {
        const BasisSpec& spec = specs[j];
        const Eigen::Index offset = block.component_offset[j];
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            const double value = z(i, static_cast<Eigen::Index>(j));
            if (!spec.contains(value)) {
                std::ostringstream msg;
                msg << "continuous covariate " << j << " row " << i << ": value " << value
                    << " outside [" << spec.lower << ", " << spec.upper << "]";
                throw DomainError(msg.str());
            }
            for (int k = 1; k <= spec.degree; ++k) {
                block.basis(i, offset + k - 1) = basis_unchecked(value, k, spec);
            }
        }
    }
    return block;
}

std::vector<double> evaluate_psi(std::span<const double> gamma, const BasisSpec& spec,
                                 std::span<const double> grid) {
    spec.validate();
    if (static_cast<int>(gamma.size()) != spec.degree) {
        throw std::invalid_argument("gamma length must equal the basis degree");
    }
    auto raw = [&](double z) {
        double s = 0.0;
        for (int k = 1; k <= spec.degree; ++k) s += gamma[k - 1] * basis_unchecked(z, k, spec);
        return s;
    };
    const double centre = raw(spec.midpoint());
    std::vector<double> out;
    out.reserve(grid.size());
    for (double z : grid) {
        if (!spec.contains(z)) {
            std::ostringstream msg;
            msg << "curve grid point " << z << " outside [" << spec.lower << ", " << spec.upper << "]";
            throw DomainError(msg.str());
        }
        out.push_back(raw(z) - centre);
    }
    return out;
}

std::vector<double> uniform_grid(const BasisSpec& spec, int count) {
    std::vector<double> grid;
    if (count <= 0) return grid;
    if (count == 1) return {spec.midpoint()};
    grid.reserve(static_cast<std::size_t>(count));
    const double step = (spec.upper - spec.lower) / (count - 1);
    for (int i = 0; i < count; ++i) grid.push_back(i + 1 == count ? spec.upper : spec.lower + step * i);
    return grid;
}

}  // namespace gplmbar
