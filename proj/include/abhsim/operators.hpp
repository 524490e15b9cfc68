#pragma once

#include <Eigen/Sparse>

#include <vector>

#include "abhsim/basis.hpp"
#include "abhsim/state.hpp"

namespace abhsim {

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Entries below this magnitude are pruned from every SparseOperator.
inline constexpr double kPruneThreshold = 1e-15;

/// Complex sparse matrix over a LatticeBasis. Matrix-vector products are O(nnz).
class SparseOperator {
public:
    SparseOperator(BasisPtr basis, SparseMatrix matrix);

    const BasisPtr& basis() const noexcept { return basis_; }
    const SparseMatrix& matrix() const noexcept { return matrix_; }
    std::size_t dimension() const noexcept { return basis_->dimension(); }
    std::size_t nonzeros() const { return static_cast<std::size_t>(matrix_.nonZeros()); }

    Vector apply(const Vector& v) const { return matrix_ * v; }
    SparseOperator adjoint() const;
    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(matrix_); }

    SparseOperator operator*(const SparseOperator& rhs) const;
    SparseOperator operator+(const SparseOperator& rhs) const;
    SparseOperator operator-(const SparseOperator& rhs) const;
    SparseOperator operator*(cplx scale) const;

    /// Max |entry| of the operator.
    double max_abs() const;
    /// Max |H - H^dagger| entry.
    double hermiticity_defect() const;

    /// Dense block on the listed basis indices (rows and columns).
    Eigen::MatrixXcd dense_block(const std::vector<std::size_t>& indices) const;

private:
    BasisPtr basis_;
    SparseMatrix matrix_;
};

/// [A, B] = AB - BA.
SparseOperator commutator(const SparseOperator& a, const SparseOperator& b);

enum class Boundary { periodic, open };

/// Parameters of the generalized attractive Bose-Hubbard Hamiltonian, all
/// angular frequencies in rad/s. chi[j] >= 0 is the Kerr strength of site j,
/// detuning[j] a static frequency offset, kappa the signed hopping rate.
struct HamiltonianParams {
    std::vector<double> chi;
    double kappa = 0.0;
    std::vector<double> detuning;
    Boundary boundary = Boundary::periodic;

    /// Uniform Kerr on every site, no detuning.
    static HamiltonianParams uniform(int sites, double chi, double kappa,
                                     Boundary boundary = Boundary::periodic);
    /// Kerr only on the first site.
    static HamiltonianParams single_site(int sites, double chi1, double kappa,
                                         Boundary boundary = Boundary::periodic);

    /// Throws ConfigError if lengths mismatch `sites` or any chi is negative.
    void validate(int sites) const;
};

/// c_site. Lowering never leaves the basis, so every source with n >= 1 has an entry.
SparseOperator annihilator(const BasisPtr& basis, int site);
/// c_site^dagger; entries whose target exceeds the truncation are absent.
SparseOperator creator(const BasisPtr& basis, int site);
/// c_site^dagger c_site.
SparseOperator number_operator(const BasisPtr& basis, int site);
/// sum_j c_j^dagger c_j.
SparseOperator total_number_operator(const BasisPtr& basis);

/// Nearest-neighbour bonds (j, j+1) of the lattice; the wrap-around bond is
/// included for periodic boundaries with M >= 2.
std::vector<std::pair<int, int>> lattice_bonds(int sites, Boundary boundary);

/// H/hbar = sum_j [ -(chi_j/2) n_j(n_j-1) + detuning_j n_j ]
///          - kappa sum_j (c_j^dag c_{j+1} + c_j c_{j+1}^dag)
SparseOperator build_hamiltonian(const BasisPtr& basis, const HamiltonianParams& params);

/// Time-dependent controls of the protocol: Kerr of site 1, Kerr of the
/// remaining sites, hopping rate. All rad/s.
struct Controls {
    double chi1 = 0.0;
    double chi = 0.0;
    double kappa = 0.0;

    bool operator==(const Controls&) const = default;
};

/// Hamiltonian family H(chi1, chi, kappa) with fixed detunings, assembled
/// as a linear combination of precomputed pieces on a shared sparsity
/// pattern. Can be restricted to a number sector.
class ParametricHamiltonian {
public:
    ParametricHamiltonian(const BasisPtr& basis, std::vector<double> detuning,
                          Boundary boundary = Boundary::periodic);

    /// Subset of basis indices the operator acts on (all indices unless restricted).
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    std::size_t dimension() const noexcept { return indices_.size(); }
    const BasisPtr& basis() const noexcept { return basis_; }

    /// Restriction to the basis states listed in `indices`.
    ParametricHamiltonian restricted(const std::vector<std::size_t>& indices) const;

    /// Sparse matrix at the given controls, in the (possibly restricted) index space.
    SparseMatrix at(const Controls& c) const;
    /// Diagonal of H at the given controls.
    Eigen::VectorXd diagonal(const Controls& c) const;
    /// Hopping part for kappa = 1 (off-diagonal, real).
    const SparseMatrix& hopping() const noexcept { return hopping_; }

    /// Full-basis SparseOperator (only valid when unrestricted).
    SparseOperator operator_at(const Controls& c) const;

private:
    ParametricHamiltonian() = default;

    BasisPtr basis_;
    std::vector<std::size_t> indices_;
    Eigen::VectorXd kerr_site1_;   // -(1/2) n_1(n_1-1)
    Eigen::VectorXd kerr_rest_;    // -(1/2) sum_{j>1} n_j(n_j-1)
    Eigen::VectorXd detuning_;     // sum_j dw_j n_j
    SparseMatrix hopping_;         // -(c_j^dag c_{j+1} + h.c.)
};

}  // namespace abhsim
