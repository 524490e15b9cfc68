#include "abhsim/state.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

#include "abhsim/errors.hpp"

namespace abhsim {

namespace {

void require_same_basis(const QuantumState& a, const QuantumState& b) {
    if (a.basis() != b.basis() && !(*a.basis() == *b.basis()))
        throw DimensionError("states live on different bases");
}

}  // namespace

QuantumState QuantumState::pure(BasisPtr basis, Vector amplitudes) {
    if (static_cast<std::size_t>(amplitudes.size()) != basis->dimension())
        throw DimensionError("state vector length " + std::to_string(amplitudes.size()) +
                             " != basis dimension " + std::to_string(basis->dimension()));
    QuantumState s(std::move(basis), Kind::pure);
    s.psi_ = std::move(amplitudes);
    return s;
}

QuantumState QuantumState::density(BasisPtr basis, Matrix rho) {
    const auto d = static_cast<Eigen::Index>(basis->dimension());
    if (rho.rows() != d || rho.cols() != d) throw DimensionError("density matrix shape mismatch");
    QuantumState s(std::move(basis), Kind::density);
    s.rho_ = std::move(rho);
    return s;
}

QuantumState QuantumState::to_density(const QuantumState& state) {
    if (!state.is_pure()) return state;
    return density(state.basis(), state.vector() * state.vector().adjoint());
}

const Vector& QuantumState::vector() const {
    if (kind_ != Kind::pure) throw DimensionError("state is a density matrix");
    return psi_;
}

const Matrix& QuantumState::matrix() const {
    if (kind_ != Kind::density) throw DimensionError("state is a pure vector");
    return rho_;
}

Vector& QuantumState::vector() {
    if (kind_ != Kind::pure) throw DimensionError("state is a density matrix");
    return psi_;
}

Matrix& QuantumState::matrix() {
    if (kind_ != Kind::density) throw DimensionError("state is a pure vector");
    return rho_;
}

double QuantumState::trace() const {
    return is_pure() ? psi_.squaredNorm() : rho_.trace().real();
}

void QuantumState::normalize() {
    double t = trace();
    if (!(t > 0.0)) throw DomainError("cannot normalize a zero state");
    if (is_pure())
        psi_ /= std::sqrt(t);
    else
        rho_ /= t;
}

double QuantumState::site_occupation(int site) const {
    if (site < 0 || site >= basis_->sites()) throw DimensionError("site index out of range");
    double acc = 0.0;
    for (std::size_t i = 0; i < dimension(); ++i) {
        const double n = basis_->occupation(i, site);
        const auto k = static_cast<Eigen::Index>(i);
        acc += n * (is_pure() ? std::norm(psi_[k]) : rho_(k, k).real());
    }
    return acc;
}

double QuantumState::total_occupation() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < dimension(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        acc += basis_->total(i) * (is_pure() ? std::norm(psi_[k]) : rho_(k, k).real());
    }
    return acc;
}

std::vector<std::string> QuantumState::validate(double trace_tolerance, double min_eigenvalue) const {
    std::vector<std::string> problems;
    if (is_pure()) {
        double dn = std::abs(psi_.norm() - 1.0);
        if (dn > trace_tolerance) problems.push_back("norm deviates from 1 by " + std::to_string(dn));
        return problems;
    }
    double herm = hermiticity_defect(rho_);
    if (herm > 1e-10) problems.push_back("hermiticity defect " + std::to_string(herm));
    double dt = std::abs(trace() - 1.0);
    if (dt > trace_tolerance) problems.push_back("trace deviates from 1 by " + std::to_string(dt));
    Matrix h = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff();
    if (lo < min_eigenvalue) problems.push_back("smallest eigenvalue " + std::to_string(lo));
    return problems;
}

QuantumState embed_input_state(const InputState& psi_in, const BasisPtr& basis, int site) {
    if (site < 0 || site >= basis->sites()) throw DimensionError("site index out of range");
    Vector psi = Vector::Zero(static_cast<Eigen::Index>(basis->dimension()));
    Occupation occ(static_cast<std::size_t>(basis->sites()), 0);
    for (const auto& c : psi_in.components()) {
        if (c.amplitude == cplx{}) continue;
        occ[static_cast<std::size_t>(site)] = c.n;
        auto idx = basis->index_of(occ);
        if (!idx)
            throw TruncationError("input component n=" + std::to_string(c.n) +
                                  " does not fit the truncated basis");
        psi[static_cast<Eigen::Index>(*idx)] = c.amplitude;
    }
    auto s = QuantumState::pure(basis, std::move(psi));
    s.normalize();
    return s;
}

double fidelity(const QuantumState& state, const QuantumState& target) {
    require_same_basis(state, target);
    if (!target.is_pure()) throw DimensionError("fidelity target must be pure");
    const Vector& t = target.vector();
    if (state.is_pure()) return std::norm(t.dot(state.vector()));
    return (t.adjoint() * state.matrix() * t)(0, 0).real();
}

cplx overlap(const QuantumState& target, const QuantumState& state) {
    require_same_basis(state, target);
    return target.vector().dot(state.vector());
}

double purity(const QuantumState& state) {
    if (state.is_pure()) return 1.0;
    // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
    return state.matrix().cwiseAbs2().sum();
}

QuantumState partial_trace(const QuantumState& state, const std::set<int>& keep_sites) {
    const auto& basis = state.basis();
    if (keep_sites.empty()) throw DimensionError("partial_trace: keep set is empty");
    for (int s : keep_sites)
        if (s < 0 || s >= basis->sites()) throw DimensionError("partial_trace: site out of range");

    LatticeSpec reduced_spec;
    reduced_spec.sites = static_cast<int>(keep_sites.size());
    reduced_spec.per_site_cap = basis->per_site_cap();
    if (basis->spec().total_cap)
        reduced_spec.total_cap = std::min(*basis->spec().total_cap,
                                          reduced_spec.sites * reduced_spec.per_site_cap);
    auto reduced = build_basis(reduced_spec);

    std::vector<int> traced;
    for (int s = 0; s < basis->sites(); ++s)
        if (!keep_sites.count(s)) traced.push_back(s);

    // Split every basis state into (kept index, environment key).
    const std::size_t d = basis->dimension();
    std::vector<std::size_t> kept(d);
    std::vector<Occupation> env(d);
    Occupation k(keep_sites.size());
    for (std::size_t i = 0; i < d; ++i) {
        std::size_t p = 0;
        for (int s : keep_sites) k[p++] = basis->occupation(i, s);
        kept[i] = *reduced->index_of(k);
        env[i].resize(traced.size());
        for (std::size_t q = 0; q < traced.size(); ++q) env[i][q] = basis->occupation(i, traced[q]);
    }
    // Group basis states by environment configuration.
    std::map<Occupation, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < d; ++i) groups[env[i]].push_back(i);

    const auto rd = static_cast<Eigen::Index>(reduced->dimension());
    Matrix out = Matrix::Zero(rd, rd);
    for (const auto& [key, members] : groups) {
        for (std::size_t a : members) {
            for (std::size_t b : members) {
                const auto ia = static_cast<Eigen::Index>(a);
                const auto ib = static_cast<Eigen::Index>(b);
                cplx v = state.is_pure() ? state.vector()[ia] * std::conj(state.vector()[ib])
                                         : state.matrix()(ia, ib);
                out(static_cast<Eigen::Index>(kept[a]), static_cast<Eigen::Index>(kept[b])) += v;
            }
        }
    }
    return QuantumState::density(reduced, std::move(out));
}

double hermiticity_defect(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace abhsim
