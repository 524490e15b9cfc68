#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "abhsim/errors.hpp"
#include "abhsim/operators.hpp"
#include "abhsim/schedule.hpp"
#include "abhsim/state.hpp"

namespace abhsim {

/// Amplitude damping with constant T1 and pure dephasing whose T_phi varies
/// linearly in chi between T_phi(0) and T_phi(chi_max). Times in seconds.
struct DampingModel {
    double t1 = 20e-6;
    double tphi_at_zero_chi = 1.0;
    double tphi_at_max_chi = 300e-6;
    double chi_max = 1.0;

    void validate() const;
    /// T_phi(chi), chi clamped into [0, chi_max].
    double tphi(double chi) const;
    double amplitude_rate() const { return 1.0 / t1; }
    double dephasing_rate(double chi) const { return 1.0 / tphi(chi); }
};

/// Lindblad generator for the resonator chain
///
///   d rho/dt = -i[H, rho] + sum_j (1/T1) D[c_j] rho + sum_j (1/T_phi) G[c_j] rho
///   D[c] rho = c rho c^dag - {c^dag c, rho}/2
///   G[c] rho = n rho n - {n^2, rho}/2,  n = c^dag c
///
/// H enters only through a sparse-times-dense product; the dim^2 x dim^2
/// superoperator is never formed. Immutable, shareable between threads.
class LindbladGenerator {
public:
    LindbladGenerator(BasisPtr basis, std::optional<DampingModel> damping);

    const BasisPtr& basis() const noexcept { return basis_; }
    const std::optional<DampingModel>& damping() const noexcept { return damping_; }

    /// out = d rho/dt. `chi_site1` sets T_phi of site 1, `chi_rest` that of the others.
    /// rho must be Hermitian.
    void apply(const Matrix& rho, const SparseMatrix& h, double chi_site1, double chi_rest,
               Matrix& out) const;
    /// Same with H = diag(h_diagonal) + kappa * hopping, without assembling H.
    void apply(const Matrix& rho, const Eigen::VectorXd& h_diagonal, double kappa,
               const SparseMatrix& hopping, double chi_site1, double chi_rest, Matrix& out) const;

private:
    // out = -i (X - X^dag) + dissipators, with X = H_eff rho already in `out`.
    void finish(const Matrix& rho, double chi_site1, double chi_rest, Matrix& out) const;

    BasisPtr basis_;
    std::optional<DampingModel> damping_;
    Eigen::VectorXd total_n_;
    // jump_source_[j][a]: index of the state with one more quantum on site j, or -1
    std::vector<std::vector<std::ptrdiff_t>> jump_source_;
    std::vector<std::vector<double>> jump_weight_;
    Eigen::MatrixXd dephase_site1_;
    Eigen::MatrixXd dephase_rest_;
};

/// d rho/dt for a single instantaneous chi shared by all sites.
Matrix lindblad_rhs(const QuantumState& rho, const SparseOperator& h,
                    const std::optional<DampingModel>& damping, double chi_now);

namespace detail {
template <class T>
bool all_finite(const T& value) {
    if constexpr (std::is_arithmetic_v<T>) {
        return std::isfinite(value);
    } else if constexpr (requires { value.real(); value.imag(); } && !requires { value.size(); }) {
        return std::isfinite(value.real()) && std::isfinite(value.imag());
    } else {
        return value.allFinite();
    }
}
}  // namespace detail

/// Classical fourth-order Runge-Kutta with reusable stage buffers.
/// `rhs(t, y, dydt)` must write the derivative into dydt.
template <class State>
class Rk4 {
public:
    template <class Rhs>
    void step(State& y, double t, double dt, Rhs&& rhs, std::size_t step_index = 0) {
        if (!(dt > 0.0)) throw DomainError("rk4: dt must be positive");
        ensure_shape(y);
        rhs(t, y, k1_);
        tmp_ = y + (0.5 * dt) * k1_;
        rhs(t + 0.5 * dt, tmp_, k2_);
        tmp_ = y + (0.5 * dt) * k2_;
        rhs(t + 0.5 * dt, tmp_, k3_);
        tmp_ = y + dt * k3_;
        rhs(t + dt, tmp_, k4_);
        y += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
        if (!detail::all_finite(y)) throw NumericalError("rk4: non-finite state", step_index);
    }

private:
    void ensure_shape(const State& y) {
        if constexpr (requires { y.rows(); y.cols(); }) {
            if (k1_.rows() != y.rows() || k1_.cols() != y.cols()) {
                k1_ = State::Zero(y.rows(), y.cols());
                k2_ = k1_;
                k3_ = k1_;
                k4_ = k1_;
                tmp_ = k1_;
            }
        }
    }

    State k1_{}, k2_{}, k3_{}, k4_{}, tmp_{};
};

/// Single RK4 step; convenience wrapper around Rk4.
template <class State, class Rhs>
State rk4_step(const State& y, double t, double dt, Rhs&& rhs, std::size_t step_index = 0) {
    State out = y;
    Rk4<State> integrator;
    integrator.step(out, t, dt, std::forward<Rhs>(rhs), step_index);
    return out;
}

/// One record of an accumulated-phase ledger.
struct PhaseSample {
    double t = 0.0;
    /// arg <reference(t)|psi(t)>, unwrapped along the trajectory.
    double phase = 0.0;
    /// |<reference(t)|psi(t)>|^2.
    double eigen_population = 0.0;
    /// <reference(t)|H(t)|reference(t)>.
    double energy = 0.0;
};

/// phi_n(t) of one number sector, measured against a parallel-transported
/// instantaneous eigenvector of H(t).
struct PhaseLedger {
    int sector_n = 0;
    std::vector<PhaseSample> samples;

    double final_phase() const { return samples.empty() ? 0.0 : samples.back().phase; }
    /// Smallest eigen_population over samples with t in [t0, t1].
    double min_population(double t0, double t1) const;
};

/// Follows one eigenvector of a slowly varying Hermitian matrix. The new
/// reference is the projection of the previous one onto the eigenspace it
/// overlaps most (clustered by degeneracy), so its phase is continuous.
class EigenTracker {
public:
    explicit EigenTracker(double degeneracy_tolerance = 1e-9) : tolerance_(degeneracy_tolerance) {}

    /// Starts tracking the eigenspace of `h` that carries most of `psi`.
    void reset(const Eigen::MatrixXcd& h, const Vector& psi);
    /// Advances the reference to the spectrum of `h`.
    void update(const Eigen::MatrixXcd& h);

    const Vector& reference() const noexcept { return reference_; }
    double energy() const noexcept { return energy_; }

private:
    void project(const Eigen::MatrixXcd& h, const Vector& guide);

    double tolerance_;
    Vector reference_;
    double energy_ = 0.0;
};

struct ClosedEvolutionOptions {
    double dt = 1e-12;
    /// RK4 steps between ledger samples; 0 disables phase tracking.
    std::size_t ledger_stride = 10;
    /// Called with (steps done, t, psi) at t0 and after every step.
    std::function<void(std::size_t, double, const Vector&)> observer;
};

struct SectorEvolution {
    int sector_n = 0;
    std::vector<std::size_t> indices;
    Vector state;
    PhaseLedger ledger;
};

/// Schrödinger evolution of a state confined to one number sector under the
/// schedule's H(t). The number of RK4 steps is ceil((t1 - t0)/dt); the last
/// step is shortened to land on t1. Throws InvariantError if the input has
/// more than 1e-10 weight outside the sector.
SectorEvolution evolve_closed_sector(const QuantumState& psi, int sector_n,
                                     const ParametricHamiltonian& hamiltonian,
                                     const ControlSchedule& schedule, double t0, double t1,
                                     const ClosedEvolutionOptions& options = {});

/// Same, starting from a vector already expressed on the sector indices.
SectorEvolution evolve_sector_vector(Vector psi, int sector_n,
                                     const ParametricHamiltonian& sector_hamiltonian,
                                     const ControlSchedule& schedule, double t0, double t1,
                                     const ClosedEvolutionOptions& options = {});

/// One row of a simulation trajectory.
struct TrajectorySample {
    double t = 0.0;
    double fidelity = 0.0;
    double trace = 1.0;
    double purity = 1.0;
    std::vector<double> site_occupation;
    Controls controls;
};

struct Trajectory {
    int sites = 0;
    std::vector<TrajectorySample> samples;
    /// Largest |rho - rho^dag| seen before each symmetrization.
    double max_hermiticity_defect = 0.0;
    /// Largest |Tr rho - 1| over the samples.
    double max_trace_drift = 0.0;
    std::size_t steps = 0;
};

struct OpenEvolutionOptions {
    double dt = 1e-12;
    /// RK4 steps between recorded samples (t0 and t1 are always recorded).
    std::size_t sample_stride = 100;
    /// Symmetrize rho every this many steps (0 = never).
    std::size_t symmetrize_every = 1000;
    /// Eigenvalue positivity check cadence in steps (0 = never).
    std::size_t positivity_every = 0;
    double min_eigenvalue = -1e-8;
    /// Allowed |Tr rho - 1| before IntegrationQualityError.
    double trace_budget = 1e-6;
    /// Fidelity reference; fidelity column is 0 when absent.
    std::optional<QuantumState> target;
};

/// Final density matrix together with its trajectory.
struct OpenEvolution {
    QuantumState state;
    Trajectory trajectory;
};

/// Lindblad evolution with fixed-step RK4. Controls are sampled at t, t+dt/2
/// and t+dt inside each step.
OpenEvolution evolve_open(const QuantumState& rho, const ParametricHamiltonian& hamiltonian,
                          const ControlSchedule& schedule, double t0, double t1,
                          const std::optional<DampingModel>& damping,
                          const OpenEvolutionOptions& options = {});

/// Default ceiling on the dimension accepted by the exponential propagator.
inline constexpr std::size_t kDenseOracleLimit = 512;

/// Applies exp(-i H(t_mid) dt_slice) for `n_slices` equal slices of
/// [t0, t1], with H evaluated at each slice midpoint through dense
/// eigendecomposition. Unitary to rounding. Closed systems only.
Vector exponential_oracle(const Vector& psi, const ParametricHamiltonian& hamiltonian,
                          const std::function<Controls(double)>& controls, double t0, double t1,
                          std::size_t n_slices, std::size_t dense_limit = kDenseOracleLimit);

/// Full-basis pure state propagated with a time-independent operator.
QuantumState exponential_oracle(const QuantumState& psi, const SparseOperator& h, double t0,
                                double t1, std::size_t n_slices,
                                std::size_t dense_limit = kDenseOracleLimit);

}  // namespace abhsim
