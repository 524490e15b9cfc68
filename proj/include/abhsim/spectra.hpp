#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "abhsim/operators.hpp"
#include "abhsim/state.hpp"

namespace abhsim {

/// W-phase boundary of the attractive Bose-Hubbard ring. Treated as a given
/// constant, independent of lattice size.
inline constexpr double kTau1 = 0.25;
/// Upper end of the published tau_2 range for 3 <= M <= 5.
inline constexpr double kTau2SmallRingCeiling = 0.3;

/// tau = |kappa| / (chi (N-1)). Throws DomainError for chi <= 0 or N < 2.
double tau(double kappa, double chi, int n);

struct Tau2 {
    double value = 0.0;
    /// Set when M is in the range where only bounds are known.
    bool approximate = false;
};

/// Superfluid boundary tau_2(M). M = 2 gives tau_1, M >= 5 uses
/// [2M sin^2(pi/M)]^-1, 3 <= M <= 4 clamps that formula into [tau_1, 0.3]
/// and is flagged approximate. Throws DomainError for M < 2.
Tau2 tau2(int sites);

struct PhaseParams {
    double tau = 0.0;
    double tau1 = kTau1;
    Tau2 tau2;
};

/// (1/sqrt(M)) sum_j exp(i k 2 pi j / M) |N>_j prod_{r != j} |0>_r, with j
/// counted from 1. Throws TruncationError if N exceeds the per-site cap.
QuantumState w_state(const BasisPtr& basis, int n, int k);

struct SuperfluidState {
    QuantumState state;
    /// Probability kept by the truncated basis before renormalization.
    double kept_probability = 1.0;
};

/// (N!)^{-1/2} [(1/sqrt(M)) sum_j c_j^dag]^N |vac>, projected onto the basis.
/// Throws TruncationError when more than `max_loss` probability is cut off.
SuperfluidState superfluid_state(const BasisPtr& basis, int n, double max_loss = 1e-6);

struct SpectrumResult {
    int sector_n = 0;
    /// Basis indices of the sector (columns of eigenvectors refer to these rows).
    std::vector<std::size_t> indices;
    Eigen::VectorXd eigenvalues;
    /// Columns are eigenvectors, largest-magnitude component real-positive.
    std::optional<Eigen::MatrixXcd> eigenvectors;

    /// Eigenvector `i` embedded in the full basis.
    QuantumState eigenstate(const BasisPtr& basis, std::size_t i) const;
};

/// Dense diagonalization of the N-quanta block, ascending eigenvalues.
/// Throws DomainError if the sector is empty.
SpectrumResult diagonalize_sector(const BasisPtr& basis, const HamiltonianParams& params, int n,
                                  bool with_vectors = true);

/// Same, for an already assembled sector matrix (hermitian, dense).
SpectrumResult diagonalize_dense(const Eigen::MatrixXcd& h, bool with_vectors = true);

/// Fixes the phase of each column so its largest-magnitude entry is real-positive.
void fix_eigenvector_phases(Eigen::MatrixXcd& vectors);

/// <b_q^dag b_q> for b_q = (1/sqrt(M)) sum_j exp(-i q 2 pi j / M) c_j.
std::vector<double> mode_populations(const QuantumState& state);

/// One-body density matrix G_jl = <c_j^dag c_l>.
Eigen::MatrixXcd one_body_density(const QuantumState& state);

/// Squared norm of the projection of `target` onto the lowest eigenspace;
/// equals |<ground|target>|^2 when the ground state is non-degenerate.
double ground_space_fidelity(const SpectrumResult& spectrum, const QuantumState& target,
                             double degeneracy_tolerance = 1e-9);

struct PhaseScanRow {
    double tau = 0.0;
    double ground_energy = 0.0;
    double w_fidelity = 0.0;
    double q0_population = 0.0;
};

/// Ground-state phase scan of the uniform ring at fixed chi > 0: for each
/// tau, kappa = tau chi (N-1). Rows are independent and computed in parallel.
std::vector<PhaseScanRow> phase_scan(const BasisPtr& basis, double chi, int n,
                                     const std::vector<double>& taus);

/// CSV with header `tau,ground_energy,w_fidelity,q0_population`.
void write_phase_scan_csv(std::ostream& out, const std::vector<PhaseScanRow>& rows);

}  // namespace abhsim
