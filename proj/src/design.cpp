#include "gplmbar/design.hpp"

#include <sstream>
#include <stdexcept>

namespace gplmbar {

void Dataset::validate() const {
    const Eigen::Index n = rows();
    auto check = [n](const Eigen::MatrixXd& m, const char* block) {
        if (m.rows() != n && !(m.size() == 0)) {
            std::ostringstream msg;
            msg << block << " block has " << m.rows() << " rows, response has " << n;
            throw std::invalid_argument(msg.str());
        }
    };
    check(x, "penalized");
    check(w, "categorical");
    check(z, "continuous");
    if (static_cast<Eigen::Index>(z_specs.size()) != z.cols()) {
        throw std::invalid_argument("one basis spec is required per continuous covariate");
    }
    for (const auto& s : z_specs) s.validate();
}

Dataset Dataset::subset(std::span<const Eigen::Index> picked) const {
    Dataset out;
    const auto m = static_cast<Eigen::Index>(picked.size());
    out.y.resize(m);
    out.x.resize(m, x.cols());
    out.w.resize(m, w.cols());
    out.z.resize(m, z.cols());
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index i = picked[static_cast<std::size_t>(r)];
        if (i < 0 || i >= rows()) throw std::out_of_range("row index out of range in subset");
        out.y[r] = y[i];
        if (x.cols() > 0) out.x.row(r) = x.row(i);
        if (w.cols() > 0) out.w.row(r) = w.row(i);
        if (z.cols() > 0) out.z.row(r) = z.row(i);
    }
    out.z_specs = z_specs;
    out.x_names = x_names;
    out.w_names = w_names;
    out.z_names = z_names;
    return out;
}

void Dataset::fill_default_names() {
    auto fill = [](std::vector<std::string>& names, Eigen::Index count, const char* prefix) {
        names.resize(static_cast<std::size_t>(count));
        for (Eigen::Index j = 0; j < count; ++j) {
            auto& name = names[static_cast<std::size_t>(j)];
            if (name.empty()) name = prefix + std::to_string(j + 1);
        }
    };
    fill(x_names, x.cols(), "x");
    fill(w_names, w.cols(), "w");
    fill(z_names, z.cols(), "z");
}

std::vector<BasisSpec> observed_specs(const Eigen::MatrixXd& z, int degree) {
    std::vector<BasisSpec> specs;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        BasisSpec spec{degree, z.col(j).minCoeff(), z.col(j).maxCoeff()};
        if (!(spec.lower < spec.upper)) {
            std::ostringstream msg;
            msg << "continuous covariate " << j << " is constant; a basis range needs two distinct values";
            throw std::invalid_argument(msg.str());
        }
        specs.push_back(spec);
    }
    return specs;
}

CoefficientBlocks CoefficientBlocks::zeros(const BlockMap& map) {
    return {0.0, Eigen::VectorXd::Zero(map.w_count), Eigen::VectorXd::Zero(map.gamma_count),
            Eigen::VectorXd::Zero(map.beta_count)};
}

CoefficientBlocks CoefficientBlocks::from_flat(const Eigen::VectorXd& flat, const BlockMap& map) {
    if (flat.size() != map.total()) throw std::invalid_argument("coefficient vector does not match block map");
    CoefficientBlocks c;
    c.intercept = flat[BlockMap::intercept];
    c.alpha = flat.segment(map.w_begin(), map.w_count);
    c.gamma = flat.segment(map.gamma_begin(), map.gamma_count);
    c.beta = flat.segment(map.beta_begin(), map.beta_count);
    return c;
}

Eigen::VectorXd CoefficientBlocks::flatten() const {
    Eigen::VectorXd flat(1 + alpha.size() + gamma.size() + beta.size());
    flat << intercept, alpha, gamma, beta;
    return flat;
}

bool CoefficientBlocks::matches(const BlockMap& map) const {
    return alpha.size() == map.w_count && gamma.size() == map.gamma_count && beta.size() == map.beta_count;
}

SieveDesign SieveDesign::build(const Dataset& data) {
    data.validate();
    SieveDesign d;
    d.sieve = build_sieve_block(data.z, data.z_specs);
    d.blocks.w_count = data.w.cols();
    d.blocks.gamma_count = d.sieve.basis.cols();
    d.blocks.beta_count = data.x.cols();
    d.columns.resize(data.rows(), d.blocks.total());
    d.columns.col(BlockMap::intercept).setOnes();
    if (d.blocks.w_count > 0) d.columns.middleCols(d.blocks.w_begin(), d.blocks.w_count) = data.w;
    if (d.blocks.gamma_count > 0) d.columns.middleCols(d.blocks.gamma_begin(), d.blocks.gamma_count) = d.sieve.basis;
    if (d.blocks.beta_count > 0) d.columns.middleCols(d.blocks.beta_begin(), d.blocks.beta_count) = data.x;
    return d;
}

SieveDesign SieveDesign::take_rows(std::span<const Eigen::Index> picked) const {
    SieveDesign out;
    out.blocks = blocks;
    out.sieve.specs = sieve.specs;
    out.sieve.component_of_column = sieve.component_of_column;
    out.sieve.component_offset = sieve.component_offset;
    const auto m = static_cast<Eigen::Index>(picked.size());
    out.columns.resize(m, columns.cols());
    out.sieve.basis.resize(m, sieve.basis.cols());
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index i = picked[static_cast<std::size_t>(r)];
        out.columns.row(r) = columns.row(i);
        if (sieve.basis.cols() > 0) out.sieve.basis.row(r) = sieve.basis.row(i);
    }
    return out;
}

std::vector<Eigen::Index> support_of(const Eigen::VectorXd& beta) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (beta[j] != 0.0) s.push_back(j);
    return s;
}

}  // namespace gplmbar
