#include "abhsim/operators.hpp"

#include <cmath>
#include <unordered_map>

#include "abhsim/errors.hpp"

namespace abhsim {

namespace {

using Triplet = Eigen::Triplet<cplx>;

SparseMatrix from_triplets(std::size_t dim, const std::vector<Triplet>& triplets) {
    const auto d = static_cast<Eigen::Index>(dim);
    SparseMatrix m(d, d);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

void check_site(const BasisPtr& basis, int site) {
    if (site < 0 || site >= basis->sites())
        throw DimensionError("site " + std::to_string(site) + " out of range");
}

// Basis index reached by moving one quantum from `from` to `to`, with the
// bosonic factor sqrt(n_from (n_to + 1)).
std::optional<std::pair<std::size_t, double>> hop(const LatticeBasis& basis, std::size_t i, int from,
                                                  int to, Occupation& scratch) {
    const int nf = basis.occupation(i, from);
    if (nf == 0) return std::nullopt;
    scratch = basis.state(i);
    const int nt = scratch[static_cast<std::size_t>(to)];
    --scratch[static_cast<std::size_t>(from)];
    ++scratch[static_cast<std::size_t>(to)];
    auto j = basis.index_of(scratch);
    if (!j) return std::nullopt;
    return std::make_pair(*j, std::sqrt(static_cast<double>(nf) * (nt + 1)));
}

SparseMatrix hopping_matrix(const BasisPtr& basis, Boundary boundary) {
    std::vector<Triplet> t;
    Occupation scratch;
    for (auto [a, b] : lattice_bonds(basis->sites(), boundary)) {
        for (std::size_t i = 0; i < basis->dimension(); ++i) {
            // c_a^dag c_b and c_b^dag c_a, each with coefficient -1
            if (auto r = hop(*basis, i, b, a, scratch))
                t.emplace_back(static_cast<int>(r->first), static_cast<int>(i), -r->second);
            if (auto r = hop(*basis, i, a, b, scratch))
                t.emplace_back(static_cast<int>(r->first), static_cast<int>(i), -r->second);
        }
    }
    return from_triplets(basis->dimension(), t);
}

}  // namespace

SparseOperator::SparseOperator(BasisPtr basis, SparseMatrix matrix)
    : basis_(std::move(basis)), matrix_(std::move(matrix)) {
    const auto d = static_cast<Eigen::Index>(basis_->dimension());
    if (matrix_.rows() != d || matrix_.cols() != d) throw DimensionError("operator shape mismatch");
    matrix_.prune([](Eigen::Index, Eigen::Index, const cplx& v) { return std::abs(v) > kPruneThreshold; });
    matrix_.makeCompressed();
}

SparseOperator SparseOperator::adjoint() const {
    return SparseOperator(basis_, SparseMatrix(matrix_.adjoint()));
}

SparseOperator SparseOperator::operator*(const SparseOperator& rhs) const {
    if (!(*basis_ == *rhs.basis_)) throw DimensionError("operator bases differ");
    return SparseOperator(basis_, SparseMatrix(matrix_ * rhs.matrix_));
}

SparseOperator SparseOperator::operator+(const SparseOperator& rhs) const {
    if (!(*basis_ == *rhs.basis_)) throw DimensionError("operator bases differ");
    return SparseOperator(basis_, SparseMatrix(matrix_ + rhs.matrix_));
}

SparseOperator SparseOperator::operator-(const SparseOperator& rhs) const {
    if (!(*basis_ == *rhs.basis_)) throw DimensionError("operator bases differ");
    return SparseOperator(basis_, SparseMatrix(matrix_ - rhs.matrix_));
}

SparseOperator SparseOperator::operator*(cplx scale) const {
    return SparseOperator(basis_, SparseMatrix(matrix_ * scale));
}

double SparseOperator::max_abs() const {
    double m = 0.0;
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}

double SparseOperator::hermiticity_defect() const {
    SparseMatrix diff = matrix_ - SparseMatrix(matrix_.adjoint());
    double m = 0.0;
    for (Eigen::Index k = 0; k < diff.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}

Eigen::MatrixXcd SparseOperator::dense_block(const std::vector<std::size_t>& indices) const {
    const auto n = static_cast<Eigen::Index>(indices.size());
    std::unordered_map<std::size_t, Eigen::Index> pos;
    for (Eigen::Index k = 0; k < n; ++k) pos[indices[static_cast<std::size_t>(k)]] = k;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (SparseMatrix::InnerIterator it(matrix_, static_cast<Eigen::Index>(indices[static_cast<std::size_t>(r)])); it; ++it) {
            auto c = pos.find(static_cast<std::size_t>(it.col()));
            if (c != pos.end()) out(r, c->second) = it.value();
        }
    }
    return out;
}

SparseOperator commutator(const SparseOperator& a, const SparseOperator& b) {
    return a * b - b * a;
}

HamiltonianParams HamiltonianParams::uniform(int sites, double chi, double kappa, Boundary boundary) {
    HamiltonianParams p;
    p.chi.assign(static_cast<std::size_t>(sites), chi);
    p.kappa = kappa;
    p.detuning.assign(static_cast<std::size_t>(sites), 0.0);
    p.boundary = boundary;
    return p;
}

HamiltonianParams HamiltonianParams::single_site(int sites, double chi1, double kappa, Boundary boundary) {
    HamiltonianParams p = uniform(sites, 0.0, kappa, boundary);
    p.chi[0] = chi1;
    return p;
}

void HamiltonianParams::validate(int sites) const {
    if (chi.size() != static_cast<std::size_t>(sites))
        throw ConfigError("chi has " + std::to_string(chi.size()) + " entries, expected " + std::to_string(sites));
    if (detuning.size() != static_cast<std::size_t>(sites))
        throw ConfigError("detuning has " + std::to_string(detuning.size()) + " entries, expected " +
                          std::to_string(sites));
    for (double c : chi)
        if (!(c >= 0.0)) throw ConfigError("chi must be non-negative");
    if (!std::isfinite(kappa)) throw ConfigError("kappa must be finite");
    for (double d : detuning)
        if (!std::isfinite(d)) throw ConfigError("detuning must be finite");
}

SparseOperator annihilator(const BasisPtr& basis, int site) {
    check_site(basis, site);
    std::vector<Triplet> t;
    Occupation occ;
    for (std::size_t i = 0; i < basis->dimension(); ++i) {
        const int n = basis->occupation(i, site);
        if (n == 0) continue;
        occ = basis->state(i);
        --occ[static_cast<std::size_t>(site)];
        if (auto j = basis->index_of(occ))
            t.emplace_back(static_cast<int>(*j), static_cast<int>(i), std::sqrt(static_cast<double>(n)));
    }
    return SparseOperator(basis, from_triplets(basis->dimension(), t));
}

SparseOperator creator(const BasisPtr& basis, int site) {
    return annihilator(basis, site).adjoint();
}

SparseOperator number_operator(const BasisPtr& basis, int site) {
    check_site(basis, site);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < basis->dimension(); ++i) {
        const int n = basis->occupation(i, site);
        if (n != 0) t.emplace_back(static_cast<int>(i), static_cast<int>(i), static_cast<double>(n));
    }
    return SparseOperator(basis, from_triplets(basis->dimension(), t));
}

SparseOperator total_number_operator(const BasisPtr& basis) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < basis->dimension(); ++i)
        if (basis->total(i) != 0)
            t.emplace_back(static_cast<int>(i), static_cast<int>(i), static_cast<double>(basis->total(i)));
    return SparseOperator(basis, from_triplets(basis->dimension(), t));
}

std::vector<std::pair<int, int>> lattice_bonds(int sites, Boundary boundary) {
    std::vector<std::pair<int, int>> bonds;
    for (int j = 0; j + 1 < sites; ++j) bonds.emplace_back(j, j + 1);
    if (boundary == Boundary::periodic && sites >= 2) bonds.emplace_back(sites - 1, 0);
    return bonds;
}

SparseOperator build_hamiltonian(const BasisPtr& basis, const HamiltonianParams& params) {
    params.validate(basis->sites());
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < basis->dimension(); ++i) {
        double e = 0.0;
        for (int j = 0; j < basis->sites(); ++j) {
            const double n = basis->occupation(i, j);
            e += -0.5 * params.chi[static_cast<std::size_t>(j)] * n * (n - 1.0) +
                 params.detuning[static_cast<std::size_t>(j)] * n;
        }
        if (e != 0.0) t.emplace_back(static_cast<int>(i), static_cast<int>(i), e);
    }
    SparseMatrix h = from_triplets(basis->dimension(), t);
    if (params.kappa != 0.0) h += params.kappa * hopping_matrix(basis, params.boundary);
    return SparseOperator(basis, std::move(h));
}

ParametricHamiltonian::ParametricHamiltonian(const BasisPtr& basis, std::vector<double> detuning,
                                             Boundary boundary)
    : basis_(basis) {
    const int m = basis->sites();
    if (detuning.empty()) detuning.assign(static_cast<std::size_t>(m), 0.0);
    if (detuning.size() != static_cast<std::size_t>(m))
        throw ConfigError("detuning has " + std::to_string(detuning.size()) + " entries, expected " +
                          std::to_string(m));
    const auto d = static_cast<Eigen::Index>(basis->dimension());
    indices_.resize(basis->dimension());
    kerr_site1_.resize(d);
    kerr_rest_.resize(d);
    detuning_.resize(d);
    for (std::size_t i = 0; i < basis->dimension(); ++i) {
        indices_[i] = i;
        const auto k = static_cast<Eigen::Index>(i);
        const double n1 = basis->occupation(i, 0);
        kerr_site1_[k] = -0.5 * n1 * (n1 - 1.0);
        double rest = 0.0, det = detuning[0] * n1;
        for (int j = 1; j < m; ++j) {
            const double n = basis->occupation(i, j);
            rest += -0.5 * n * (n - 1.0);
            det += detuning[static_cast<std::size_t>(j)] * n;
        }
        kerr_rest_[k] = rest;
        detuning_[k] = det;
    }
    hopping_ = hopping_matrix(basis, boundary);
    hopping_.makeCompressed();
}

ParametricHamiltonian ParametricHamiltonian::restricted(const std::vector<std::size_t>& indices) const {
    ParametricHamiltonian r;
    r.basis_ = basis_;
    const auto n = static_cast<Eigen::Index>(indices.size());
    std::unordered_map<std::size_t, Eigen::Index> local;  // position in the current index space
    std::unordered_map<std::size_t, Eigen::Index> current;
    for (std::size_t k = 0; k < indices_.size(); ++k) current[indices_[k]] = static_cast<Eigen::Index>(k);
    r.indices_ = indices;
    r.kerr_site1_.resize(n);
    r.kerr_rest_.resize(n);
    r.detuning_.resize(n);
    std::vector<Eigen::Index> src(indices.size());
    for (Eigen::Index k = 0; k < n; ++k) {
        auto it = current.find(indices[static_cast<std::size_t>(k)]);
        if (it == current.end()) throw DimensionError("restricted: index outside the operator's space");
        src[static_cast<std::size_t>(k)] = it->second;
        local[static_cast<std::size_t>(it->second)] = k;
        r.kerr_site1_[k] = kerr_site1_[it->second];
        r.kerr_rest_[k] = kerr_rest_[it->second];
        r.detuning_[k] = detuning_[it->second];
    }
    std::vector<Triplet> t;
    for (Eigen::Index k = 0; k < n; ++k) {
        for (SparseMatrix::InnerIterator it(hopping_, src[static_cast<std::size_t>(k)]); it; ++it) {
            auto c = local.find(static_cast<std::size_t>(it.col()));
            if (c != local.end()) t.emplace_back(static_cast<int>(k), static_cast<int>(c->second), it.value());
        }
    }
    r.hopping_ = from_triplets(indices.size(), t);
    r.hopping_.makeCompressed();
    return r;
}

Eigen::VectorXd ParametricHamiltonian::diagonal(const Controls& c) const {
    return c.chi1 * kerr_site1_ + c.chi * kerr_rest_ + detuning_;
}

SparseMatrix ParametricHamiltonian::at(const Controls& c) const {
    const auto n = static_cast<Eigen::Index>(indices_.size());
    Eigen::VectorXd diag = diagonal(c);
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(hopping_.nonZeros() + n));
    for (Eigen::Index k = 0; k < n; ++k) {
        if (diag[k] != 0.0) t.emplace_back(static_cast<int>(k), static_cast<int>(k), diag[k]);
        if (c.kappa != 0.0)
            for (SparseMatrix::InnerIterator it(hopping_, k); it; ++it)
                t.emplace_back(static_cast<int>(k), static_cast<int>(it.col()), c.kappa * it.value());
    }
    return from_triplets(indices_.size(), t);
}

SparseOperator ParametricHamiltonian::operator_at(const Controls& c) const {
    if (indices_.size() != basis_->dimension())
        throw DimensionError("operator_at: Hamiltonian is restricted to a subspace");
    return SparseOperator(basis_, at(c));
}

}  // namespace abhsim
