#include "abhsim/dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace abhsim {

void DampingModel::validate() const {
    if (!(t1 > 0.0)) throw ConfigError("damping.t1 must be positive");
    if (!(tphi_at_zero_chi > 0.0)) throw ConfigError("damping.tphi_zero must be positive");
    if (!(tphi_at_max_chi > 0.0)) throw ConfigError("damping.tphi_max must be positive");
    if (!(chi_max > 0.0)) throw ConfigError("damping chi_max must be positive");
}

double DampingModel::tphi(double chi) const {
    const double x = std::clamp(chi / chi_max, 0.0, 1.0);
    return tphi_at_zero_chi + (tphi_at_max_chi - tphi_at_zero_chi) * x;
}

LindbladGenerator::LindbladGenerator(BasisPtr basis, std::optional<DampingModel> damping)
    : basis_(std::move(basis)), damping_(std::move(damping)) {
    if (damping_) damping_->validate();
    const std::size_t d = basis_->dimension();
    const int m = basis_->sites();
    const auto di = static_cast<Eigen::Index>(d);
    total_n_.resize(di);
    for (std::size_t i = 0; i < d; ++i) total_n_[static_cast<Eigen::Index>(i)] = basis_->total(i);

    jump_source_.assign(static_cast<std::size_t>(m), std::vector<std::ptrdiff_t>(d, -1));
    jump_weight_.assign(static_cast<std::size_t>(m), std::vector<double>(d, 0.0));
    Occupation occ;
    for (int j = 0; j < m; ++j) {
        for (std::size_t a = 0; a < d; ++a) {
            occ = basis_->state(a);
            ++occ[static_cast<std::size_t>(j)];
            if (auto src = basis_->index_of(occ)) {
                jump_source_[static_cast<std::size_t>(j)][a] = static_cast<std::ptrdiff_t>(*src);
                jump_weight_[static_cast<std::size_t>(j)][a] = std::sqrt(static_cast<double>(occ[static_cast<std::size_t>(j)]));
            }
        }
    }

    dephase_site1_.resize(di, di);
    dephase_rest_.resize(di, di);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
            const double d1 = basis_->occupation(a, 0) - basis_->occupation(b, 0);
            double rest = 0.0;
            for (int j = 1; j < m; ++j) {
                const double dj = basis_->occupation(a, j) - basis_->occupation(b, j);
                rest += dj * dj;
            }
            dephase_site1_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 0.5 * d1 * d1;
            dephase_rest_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 0.5 * rest;
        }
    }
}

void LindbladGenerator::apply(const Matrix& rho, const SparseMatrix& h, double chi_site1,
                              double chi_rest, Matrix& out) const {
    out.noalias() = h * rho;
    finish(rho, chi_site1, chi_rest, out);
}

void LindbladGenerator::apply(const Matrix& rho, const Eigen::VectorXd& h_diagonal, double kappa,
                              const SparseMatrix& hopping, double chi_site1, double chi_rest,
                              Matrix& out) const {
    out.noalias() = h_diagonal.asDiagonal() * rho;
    if (kappa != 0.0) out.noalias() += kappa * (hopping * rho);
    finish(rho, chi_site1, chi_rest, out);
}

void LindbladGenerator::finish(const Matrix& rho, double chi_site1, double chi_rest, Matrix& out) const {
    const cplx minus_i{0.0, -1.0};
    if (!damping_) {
        Matrix x = out;
        out.noalias() = minus_i * (x - x.adjoint());
        return;
    }
    const double g1 = damping_->amplitude_rate();
    // X = H_eff rho with H_eff = H - i (g1/2) N; the anticommutator comes out of X - X^dag.
    out.noalias() -= cplx{0.0, 0.5 * g1} * (total_n_.asDiagonal() * rho);
    Matrix x = out;
    out.noalias() = minus_i * (x - x.adjoint());

    const auto d = rho.rows();
    for (std::size_t j = 0; j < jump_source_.size(); ++j) {
        const auto& src = jump_source_[j];
        const auto& w = jump_weight_[j];
        for (Eigen::Index b = 0; b < d; ++b) {
            const auto sb = src[static_cast<std::size_t>(b)];
            if (sb < 0) continue;
            const double wb = g1 * w[static_cast<std::size_t>(b)];
            for (Eigen::Index a = 0; a < d; ++a) {
                const auto sa = src[static_cast<std::size_t>(a)];
                if (sa < 0) continue;
                out(a, b) += (wb * w[static_cast<std::size_t>(a)]) * rho(sa, sb);
            }
        }
    }

    const double gp1 = damping_->dephasing_rate(chi_site1);
    const double gpr = damping_->dephasing_rate(chi_rest);
    out.array() -= (gp1 * dephase_site1_.array() + gpr * dephase_rest_.array()).cast<cplx>() * rho.array();
}

Matrix lindblad_rhs(const QuantumState& rho, const SparseOperator& h,
                    const std::optional<DampingModel>& damping, double chi_now) {
    LindbladGenerator gen(rho.basis(), damping);
    Matrix out;
    gen.apply(rho.matrix(), h.matrix(), chi_now, chi_now, out);
    return out;
}

double PhaseLedger::min_population(double t0, double t1) const {
    double m = 1.0;
    for (const auto& s : samples)
        if (s.t >= t0 && s.t <= t1) m = std::min(m, s.eigen_population);
    return m;
}

void EigenTracker::reset(const Eigen::MatrixXcd& h, const Vector& psi) {
    project(h, psi);
}

void EigenTracker::update(const Eigen::MatrixXcd& h) {
    const Vector guide = reference_;
    project(h, guide);
}

void EigenTracker::project(const Eigen::MatrixXcd& h, const Vector& guide) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXd& e = es.eigenvalues();
    const Eigen::MatrixXcd& v = es.eigenvectors();
    const Eigen::Index n = e.size();
    const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
    const double tol = tolerance_ * scale;

    // Cluster ascending eigenvalues into degenerate groups and keep the group
    // that carries the largest weight of the guide.
    Eigen::VectorXcd coeff = v.adjoint() * guide;
    Eigen::Index best_lo = 0, best_hi = 0;
    double best_weight = -1.0;
    for (Eigen::Index lo = 0; lo < n;) {
        Eigen::Index hi = lo + 1;
        while (hi < n && e[hi] - e[hi - 1] <= tol) ++hi;
        double w = coeff.segment(lo, hi - lo).squaredNorm();
        if (w > best_weight) {
            best_weight = w;
            best_lo = lo;
            best_hi = hi;
        }
        lo = hi;
    }
    Vector ref = v.middleCols(best_lo, best_hi - best_lo) * coeff.segment(best_lo, best_hi - best_lo);
    const double norm = ref.norm();
    if (norm > 0.0) {
        reference_ = ref / norm;
    } else {
        reference_ = v.col(best_lo);
    }
    energy_ = (reference_.adjoint() * h * reference_)(0, 0).real();
}

namespace {

std::size_t step_count(double t0, double t1, double dt) {
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    if (!(t1 >= t0)) throw DomainError("t1 must not precede t0");
    const double ratio = (t1 - t0) / dt;
    auto n = static_cast<std::size_t>(std::ceil(ratio * (1.0 - 1e-12)));
    return std::max<std::size_t>(n, t1 > t0 ? 1 : 0);
}

double unwrap(double previous, double current) {
    const double two_pi = 2.0 * std::numbers::pi;
    double d = current - previous;
    d -= two_pi * std::round(d / two_pi);
    return previous + d;
}

PhaseSample ledger_sample(EigenTracker& tracker, const Vector& psi, double t,
                          const PhaseLedger& ledger) {
    const cplx ov = tracker.reference().dot(psi);
    PhaseSample s;
    s.t = t;
    const double w = psi.squaredNorm();
    s.eigen_population = w > 0.0 ? std::norm(ov) / w : 0.0;
    s.energy = tracker.energy();
    const double raw = std::arg(ov);
    s.phase = ledger.samples.empty() ? raw : unwrap(ledger.samples.back().phase, raw);
    return s;
}

Eigen::MatrixXcd dense_at(const ParametricHamiltonian& h, const Controls& c) {
    return Eigen::MatrixXcd(h.at(c));
}

}  // namespace

SectorEvolution evolve_sector_vector(Vector psi, int sector_n,
                                     const ParametricHamiltonian& sector_hamiltonian,
                                     const ControlSchedule& schedule, double t0, double t1,
                                     const ClosedEvolutionOptions& options) {
    SectorEvolution out;
    out.sector_n = sector_n;
    out.indices = sector_hamiltonian.indices();
    out.ledger.sector_n = sector_n;
    if (static_cast<std::size_t>(psi.size()) != sector_hamiltonian.dimension())
        throw DimensionError("sector vector length mismatch");

    const std::size_t steps = step_count(t0, t1, options.dt);
    const SparseMatrix& hop = sector_hamiltonian.hopping();
    const cplx minus_i{0.0, -1.0};
    auto rhs = [&](double t, const Vector& y, Vector& dy) {
        const Controls c = schedule.at(t);
        dy.noalias() = sector_hamiltonian.diagonal(c).asDiagonal() * y;
        if (c.kappa != 0.0) dy.noalias() += c.kappa * (hop * y);
        dy *= minus_i;
    };

    EigenTracker tracker;
    const bool track = options.ledger_stride > 0;
    if (track) {
        tracker.reset(dense_at(sector_hamiltonian, schedule.at(t0)), psi);
        out.ledger.samples.push_back(ledger_sample(tracker, psi, t0, out.ledger));
    }

    if (options.observer) options.observer(0, t0, psi);
    Rk4<Vector> rk4;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = t0 + static_cast<double>(k) * options.dt;
        const double h = (k + 1 == steps) ? t1 - t : options.dt;
        rk4.step(psi, t, h, rhs, k);
        if (options.observer) options.observer(k + 1, t + h, psi);
        if (track && ((k + 1) % options.ledger_stride == 0 || k + 1 == steps)) {
            const double tn = t + h;
            tracker.update(dense_at(sector_hamiltonian, schedule.at(tn)));
            out.ledger.samples.push_back(ledger_sample(tracker, psi, tn, out.ledger));
        }
    }
    out.state = std::move(psi);
    return out;
}

SectorEvolution evolve_closed_sector(const QuantumState& psi, int sector_n,
                                     const ParametricHamiltonian& hamiltonian,
                                     const ControlSchedule& schedule, double t0, double t1,
                                     const ClosedEvolutionOptions& options) {
    if (!psi.is_pure()) throw DimensionError("evolve_closed_sector needs a pure state");
    const auto indices = psi.basis()->sector_indices(sector_n);
    if (indices.empty()) throw DomainError("sector " + std::to_string(sector_n) + " is empty");
    const Vector& full = psi.vector();
    double inside = 0.0;
    Vector sub(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
        sub[static_cast<Eigen::Index>(k)] = full[static_cast<Eigen::Index>(indices[k])];
        inside += std::norm(sub[static_cast<Eigen::Index>(k)]);
    }
    const double leak = full.squaredNorm() - inside;
    if (leak > 1e-10)
        throw InvariantError("state has weight " + std::to_string(leak) + " outside sector " +
                             std::to_string(sector_n));
    return evolve_sector_vector(std::move(sub), sector_n, hamiltonian.restricted(indices), schedule, t0,
                                t1, options);
}

OpenEvolution evolve_open(const QuantumState& rho0, const ParametricHamiltonian& hamiltonian,
                          const ControlSchedule& schedule, double t0, double t1,
                          const std::optional<DampingModel>& damping,
                          const OpenEvolutionOptions& options) {
    if (hamiltonian.dimension() != rho0.dimension())
        throw DimensionError("evolve_open needs an unrestricted Hamiltonian");
    QuantumState state = QuantumState::to_density(rho0);
    const auto& basis = state.basis();
    const int m = basis->sites();
    LindbladGenerator gen(basis, damping);
    const SparseMatrix& hop = hamiltonian.hopping();

    Trajectory traj;
    traj.sites = m;
    auto record = [&](double t) {
        TrajectorySample s;
        s.t = t;
        s.trace = state.trace();
        s.purity = purity(state);
        s.fidelity = options.target ? fidelity(state, *options.target) : 0.0;
        s.site_occupation.resize(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) s.site_occupation[static_cast<std::size_t>(j)] = state.site_occupation(j);
        s.controls = schedule.at(t);
        const double drift = std::abs(s.trace - 1.0);
        traj.max_trace_drift = std::max(traj.max_trace_drift, drift);
        traj.max_hermiticity_defect = std::max(traj.max_hermiticity_defect, hermiticity_defect(state.matrix()));
        traj.samples.push_back(std::move(s));
        if (drift > options.trace_budget)
            throw IntegrationQualityError("trace drift " + std::to_string(drift) + " exceeds budget at t=" +
                                          std::to_string(t));
    };

    auto rhs = [&](double t, const Matrix& r, Matrix& dr) {
        const Controls c = schedule.at(t);
        gen.apply(r, hamiltonian.diagonal(c), c.kappa, hop, c.chi1, c.chi, dr);
    };

    const std::size_t steps = step_count(t0, t1, options.dt);
    record(t0);
    Rk4<Matrix> rk4;
    Matrix& rho = state.matrix();
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = t0 + static_cast<double>(k) * options.dt;
        const double h = (k + 1 == steps) ? t1 - t : options.dt;
        rk4.step(rho, t, h, rhs, k);
        const std::size_t done = k + 1;
        if (options.symmetrize_every > 0 && done % options.symmetrize_every == 0) {
            traj.max_hermiticity_defect = std::max(traj.max_hermiticity_defect, hermiticity_defect(rho));
            Matrix sym = 0.5 * (rho + rho.adjoint());
            rho = std::move(sym);
        }
        if (options.positivity_every > 0 && done % options.positivity_every == 0) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
            const double lo = es.eigenvalues().minCoeff();
            if (lo < options.min_eigenvalue)
                throw IntegrationQualityError("density matrix eigenvalue " + std::to_string(lo) +
                                              " below tolerance at step " + std::to_string(done));
        }
        if ((options.sample_stride > 0 && done % options.sample_stride == 0) || done == steps) record(t + h);
    }
    traj.steps = steps;
    return OpenEvolution{std::move(state), std::move(traj)};
}

namespace {

void check_oracle_dimension(std::size_t dim, std::size_t limit) {
    if (dim > limit)
        throw ResourceError("exponential oracle: dimension " + std::to_string(dim) + " exceeds limit " +
                            std::to_string(limit));
}

Vector propagate(const Eigen::MatrixXcd& h, const Vector& psi, double dt) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXcd phases = (es.eigenvalues() * (-dt)).unaryExpr([](double x) {
        return std::polar(1.0, x);
    });
    return es.eigenvectors() * phases.asDiagonal() * (es.eigenvectors().adjoint() * psi);
}

}  // namespace

Vector exponential_oracle(const Vector& psi, const ParametricHamiltonian& hamiltonian,
                          const std::function<Controls(double)>& controls, double t0, double t1,
                          std::size_t n_slices, std::size_t dense_limit) {
    check_oracle_dimension(hamiltonian.dimension(), dense_limit);
    if (n_slices == 0) throw DomainError("exponential oracle needs at least one slice");
    const double h = (t1 - t0) / static_cast<double>(n_slices);
    Vector out = psi;
    for (std::size_t k = 0; k < n_slices; ++k) {
        const double mid = t0 + (static_cast<double>(k) + 0.5) * h;
        out = propagate(Eigen::MatrixXcd(hamiltonian.at(controls(mid))), out, h);
    }
    return out;
}

QuantumState exponential_oracle(const QuantumState& psi, const SparseOperator& h, double t0, double t1,
                                std::size_t n_slices, std::size_t dense_limit) {
    check_oracle_dimension(h.dimension(), dense_limit);
    if (n_slices == 0) throw DomainError("exponential oracle needs at least one slice");
    if (!psi.is_pure()) throw DimensionError("exponential oracle propagates pure states");
    const double dt = (t1 - t0) / static_cast<double>(n_slices);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.dense());
    const Eigen::VectorXcd phases = (es.eigenvalues() * (-dt)).unaryExpr([](double x) {
        return std::polar(1.0, x);
    });
    const Eigen::MatrixXcd u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    Vector out = psi.vector();
    for (std::size_t k = 0; k < n_slices; ++k) out = u * out;
    return QuantumState::pure(psi.basis(), std::move(out));
}

}  // namespace abhsim
