#include "abhsim/spectra.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "abhsim/errors.hpp"
#include "abhsim/io.hpp"
#include "abhsim/parallel.hpp"

namespace abhsim {

double tau(double kappa, double chi, int n) {
    if (!(chi > 0.0)) throw DomainError("tau: chi must be positive");
    if (n < 2) throw DomainError("tau: N must be at least 2");
    return std::abs(kappa) / (chi * (n - 1));
}

namespace {

double tau2_formula(int m) {
    const double s = std::sin(std::numbers::pi / m);
    return 1.0 / (2.0 * m * s * s);
}

}  // namespace

Tau2 tau2(int sites) {
    if (sites < 2) throw DomainError("tau2: M must be at least 2");
    if (sites == 2) return {kTau1, false};
    if (sites >= 5) return {tau2_formula(sites), false};
    // Only the range (tau_1, 0.3] is known here. The formula gives 0.222 and
    // 0.25 for M = 3, 4, so both clamp to the lower end.
    return {std::clamp(tau2_formula(sites), kTau1, kTau2SmallRingCeiling), true};
}

QuantumState w_state(const BasisPtr& basis, int n, int k) {
    const int m = basis->sites();
    if (n > basis->per_site_cap()) throw TruncationError("w_state: N exceeds the per-site cap");
    if (n < 0) throw DomainError("w_state: N must be non-negative");
    Vector psi = Vector::Zero(static_cast<Eigen::Index>(basis->dimension()));
    Occupation occ(static_cast<std::size_t>(m), 0);
    const double norm = 1.0 / std::sqrt(static_cast<double>(m));
    for (int j = 1; j <= m; ++j) {
        std::fill(occ.begin(), occ.end(), 0);
        occ[static_cast<std::size_t>(j - 1)] = n;
        auto idx = basis->index_of(occ);
        if (!idx) throw TruncationError("w_state: localized state outside the basis");
        psi[static_cast<Eigen::Index>(*idx)] += norm * std::polar(1.0, 2.0 * std::numbers::pi * k * j / m);
    }
    auto s = QuantumState::pure(basis, std::move(psi));
    s.normalize();  // N = 0 puts every term on the vacuum
    return s;
}

SuperfluidState superfluid_state(const BasisPtr& basis, int n, double max_loss) {
    const int m = basis->sites();
    Vector psi = Vector::Zero(static_cast<Eigen::Index>(basis->dimension()));
    const double log_nfact = std::lgamma(n + 1.0);
    double kept = 0.0;
    for (std::size_t i = 0; i < basis->dimension(); ++i) {
        if (basis->total(i) != n) continue;
        double log_amp2 = log_nfact - n * std::log(static_cast<double>(m));
        for (int j = 0; j < m; ++j) log_amp2 -= std::lgamma(basis->occupation(i, j) + 1.0);
        const double a2 = std::exp(log_amp2);
        psi[static_cast<Eigen::Index>(i)] = std::sqrt(a2);
        kept += a2;
    }
    if (1.0 - kept > max_loss)
        throw TruncationError("superfluid_state: truncation discards probability " + std::to_string(1.0 - kept));
    SuperfluidState out{QuantumState::pure(basis, std::move(psi)), kept};
    out.state.normalize();
    return out;
}

QuantumState SpectrumResult::eigenstate(const BasisPtr& basis, std::size_t i) const {
    if (!eigenvectors) throw DomainError("spectrum computed without eigenvectors");
    Vector psi = Vector::Zero(static_cast<Eigen::Index>(basis->dimension()));
    for (std::size_t r = 0; r < indices.size(); ++r)
        psi[static_cast<Eigen::Index>(indices[r])] =
            (*eigenvectors)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
    return QuantumState::pure(basis, std::move(psi));
}

void fix_eigenvector_phases(Eigen::MatrixXcd& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index best = 0;
        double mag = -1.0;
        // First index wins ties, so the choice is deterministic.
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
            const double a = std::abs(vectors(r, c));
            if (a > mag * (1.0 + 1e-12)) {
                mag = a;
                best = r;
            }
        }
        if (mag > 0.0) vectors.col(c) *= std::conj(vectors(best, c)) / mag;
    }
}

SpectrumResult diagonalize_dense(const Eigen::MatrixXcd& h, bool with_vectors) {
    SpectrumResult out;
    if (h.rows() == 0) throw DomainError("cannot diagonalize an empty block");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        h, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    out.eigenvalues = es.eigenvalues();
    if (with_vectors) {
        Eigen::MatrixXcd v = es.eigenvectors();
        fix_eigenvector_phases(v);
        out.eigenvectors = std::move(v);
    }
    return out;
}

SpectrumResult diagonalize_sector(const BasisPtr& basis, const HamiltonianParams& params, int n,
                                  bool with_vectors) {
    auto indices = basis->sector_indices(n);
    if (indices.empty()) throw DomainError("sector N=" + std::to_string(n) + " is empty");
    SparseOperator h = build_hamiltonian(basis, params);
    SpectrumResult out = diagonalize_dense(h.dense_block(indices), with_vectors);
    out.sector_n = n;
    out.indices = std::move(indices);
    return out;
}

Eigen::MatrixXcd one_body_density(const QuantumState& state) {
    const auto& basis = state.basis();
    const int m = basis->sites();
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(m, m);
    Occupation occ;
    auto rho = [&](std::size_t a, std::size_t b) -> cplx {
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        if (state.is_pure()) return state.vector()[ia] * std::conj(state.vector()[ib]);
        return state.matrix()(ia, ib);
    };
    for (int j = 0; j < m; ++j) {
        for (int l = 0; l < m; ++l) {
            cplx acc = 0.0;
            for (std::size_t t = 0; t < basis->dimension(); ++t) {
                const int nl = basis->occupation(t, l);
                if (nl == 0) continue;
                occ = basis->state(t);
                double amp = std::sqrt(static_cast<double>(nl));
                --occ[static_cast<std::size_t>(l)];
                amp *= std::sqrt(static_cast<double>(occ[static_cast<std::size_t>(j)] + 1));
                ++occ[static_cast<std::size_t>(j)];
                auto i = basis->index_of(occ);
                if (!i) continue;
                // Tr(c_j^dag c_l rho) = sum_t <i|c_j^dag c_l|t> rho_ti
                acc += amp * rho(t, *i);
            }
            g(j, l) = acc;
        }
    }
    return g;
}

std::vector<double> mode_populations(const QuantumState& state) {
    const int m = state.basis()->sites();
    const Eigen::MatrixXcd g = one_body_density(state);
    std::vector<double> pops(static_cast<std::size_t>(m), 0.0);
    for (int q = 0; q < m; ++q) {
        cplx acc = 0.0;
        for (int j = 0; j < m; ++j)
            for (int l = 0; l < m; ++l)
                acc += std::polar(1.0, 2.0 * std::numbers::pi * q * (j - l) / m) * g(j, l);
        pops[static_cast<std::size_t>(q)] = acc.real() / m;
    }
    return pops;
}

namespace {

Eigen::Index ground_multiplicity(const Eigen::VectorXd& e, double tolerance) {
    const double tol = tolerance * std::max(1.0, e.cwiseAbs().maxCoeff());
    Eigen::Index g = 1;
    while (g < e.size() && e[g] - e[0] <= tol) ++g;
    return g;
}

}  // namespace

double ground_space_fidelity(const SpectrumResult& spectrum, const QuantumState& target,
                             double degeneracy_tolerance) {
    if (!spectrum.eigenvectors) throw DomainError("spectrum computed without eigenvectors");
    const Eigen::Index g = ground_multiplicity(spectrum.eigenvalues, degeneracy_tolerance);
    Vector sub(static_cast<Eigen::Index>(spectrum.indices.size()));
    for (std::size_t r = 0; r < spectrum.indices.size(); ++r)
        sub[static_cast<Eigen::Index>(r)] = target.vector()[static_cast<Eigen::Index>(spectrum.indices[r])];
    return (spectrum.eigenvectors->leftCols(g).adjoint() * sub).squaredNorm();
}

std::vector<PhaseScanRow> phase_scan(const BasisPtr& basis, double chi, int n, const std::vector<double>& taus) {
    if (!(chi > 0.0)) throw DomainError("phase_scan: chi must be positive");
    if (n < 2) throw DomainError("phase_scan: N must be at least 2");
    const QuantumState w = w_state(basis, n, 0);
    std::vector<PhaseScanRow> rows(taus.size());
    parallel_for(taus.size(), [&](std::size_t i) {
        const double t = taus[i];
        const auto params = HamiltonianParams::uniform(basis->sites(), chi, t * chi * (n - 1));
        SpectrumResult s = diagonalize_sector(basis, params, n);
        PhaseScanRow row;
        row.tau = t;
        row.ground_energy = s.eigenvalues[0];
        row.w_fidelity = ground_space_fidelity(s, w);
        // Average over a degenerate ground space so the value does not depend
        // on the solver's choice of basis inside it.
        const Eigen::Index g = ground_multiplicity(s.eigenvalues, 1e-9);
        double q0 = 0.0;
        for (Eigen::Index k = 0; k < g; ++k)
            q0 += mode_populations(s.eigenstate(basis, static_cast<std::size_t>(k)))[0];
        row.q0_population = q0 / static_cast<double>(g);
        rows[i] = row;
    });
    return rows;
}

void write_phase_scan_csv(std::ostream& out, const std::vector<PhaseScanRow>& rows) {
    out << "tau,ground_energy,w_fidelity,q0_population\n";
    for (const auto& r : rows)
        out << format_double(r.tau) << ',' << format_double(r.ground_energy) << ','
            << format_double(r.w_fidelity) << ',' << format_double(r.q0_population) << '\n';
}

}  // namespace abhsim
