#pragma once

#include <Eigen/Dense>

#include <set>
#include <string>
#include <vector>

#include "abhsim/basis.hpp"

namespace abhsim {

using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

/// Pure state vector or density matrix over a LatticeBasis.
class QuantumState {
public:
    enum class Kind { pure, density };

    static QuantumState pure(BasisPtr basis, Vector amplitudes);
    static QuantumState density(BasisPtr basis, Matrix rho);
    /// |psi><psi| of a pure state; a density state is returned unchanged.
    static QuantumState to_density(const QuantumState& state);

    Kind kind() const noexcept { return kind_; }
    bool is_pure() const noexcept { return kind_ == Kind::pure; }
    const BasisPtr& basis() const noexcept { return basis_; }
    std::size_t dimension() const noexcept { return basis_->dimension(); }

    const Vector& vector() const;
    const Matrix& matrix() const;
    Vector& vector();
    Matrix& matrix();

    /// Tr(rho) for density matrices, ||psi||^2 for pure states.
    double trace() const;
    /// Rescales to unit norm / unit trace.
    void normalize();
    /// <n_site>.
    double site_occupation(int site) const;
    /// <N_total>.
    double total_occupation() const;

    /// Hermiticity, trace and positivity checks for density matrices; norm
    /// check for pure states. Empty result means valid.
    std::vector<std::string> validate(double trace_tolerance = 1e-10,
                                      double min_eigenvalue = -1e-8) const;

private:
    QuantumState(BasisPtr basis, Kind kind) : basis_(std::move(basis)), kind_(kind) {}

    BasisPtr basis_;
    Kind kind_;
    Vector psi_;
    Matrix rho_;
};

/// Places psi_in on `site` (0-based) with every other site in vacuum.
/// Throws TruncationError if an amplitude needs n > per_site_cap.
QuantumState embed_input_state(const InputState& psi_in, const BasisPtr& basis, int site);

/// |<target|psi>|^2 or <target|rho|target>. `target` must be pure.
double fidelity(const QuantumState& state, const QuantumState& target);

/// Complex overlap <target|psi> for pure states.
cplx overlap(const QuantumState& target, const QuantumState& state);

/// Tr(rho^2); exactly 1 for pure states.
double purity(const QuantumState& state);

/// Reduced density matrix on `keep_sites` (0-based). The result lives on a
/// basis of |keep_sites| sites with the same per-site cap.
QuantumState partial_trace(const QuantumState& state, const std::set<int>& keep_sites);

/// Maximum |A - A^dagger| entry.
double hermiticity_defect(const Matrix& m);

}  // namespace abhsim
