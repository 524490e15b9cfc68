#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <numbers>
#include <random>

#include "abhsim/dynamics.hpp"
#include "abhsim/errors.hpp"
#include "abhsim/protocol.hpp"

using namespace abhsim;

namespace {

constexpr double kMHz = 2.0 * std::numbers::pi * 1e6;

BasisPtr ring(int m, int cap) { return build_basis(LatticeSpec{m, cap, std::nullopt}); }

Matrix random_density(std::size_t n, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> d;
    Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = cplx(d(gen), d(gen));
    Matrix rho = a * a.adjoint();
    return rho / rho.trace().real();
}

// exp(-i H t) psi by dense eigendecomposition, written independently of the library oracle.
Vector propagate(const Eigen::MatrixXcd& h, const Vector& psi, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
    const Eigen::VectorXcd phases = (eig.eigenvalues().cast<cplx>() * cplx(0.0, -t)).array().exp();
    return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint() * psi;
}

const StepDurations kShort{3e-9, 5e-9, 6e-9, 3e-9, 6e-9, 5e-9, 4e-9};

}  // namespace

TEST_CASE("Lindblad generator") {
    const auto b = ring(3, 2);
    const auto h = build_hamiltonian(b, HamiltonianParams::uniform(3, 100 * kMHz, 30 * kMHz));
    DampingModel d;
    d.chi_max = 100 * kMHz;

    Matrix vac = Matrix::Zero(27, 27);
    vac(0, 0) = 1.0;
    CHECK(lindblad_rhs(QuantumState::density(b, vac), h, d, 50 * kMHz).cwiseAbs().maxCoeff() == 0.0);

    for (unsigned seed : {1u, 2u, 3u}) {
        const auto rho = QuantumState::density(b, random_density(27, seed));
        const Matrix drho = lindblad_rhs(rho, h, d, 70 * kMHz);
        CHECK(std::abs(drho.trace()) < 1e-12 * drho.cwiseAbs().maxCoeff());
        CHECK(hermiticity_defect(drho) <= 1e-12 * drho.cwiseAbs().maxCoeff());
    }

    const auto one = ring(1, 3);
    Matrix rho1 = Matrix::Zero(4, 4);
    rho1(1, 1) = 1.0;
    const SparseOperator zero(one, SparseMatrix(4, 4));
    const Matrix dr = lindblad_rhs(QuantumState::density(one, rho1), zero, d, 0.0);
    double dn = 0.0;
    for (int k = 0; k < 4; ++k) dn += k * dr(k, k).real();
    CHECK(dn == doctest::Approx(-1.0 / d.t1).epsilon(1e-12));
}

TEST_CASE("dephasing rate follows chi linearly") {
    DampingModel d;
    d.chi_max = 100 * kMHz;
    CHECK(d.tphi(0.0) == 1.0);
    CHECK(d.tphi(d.chi_max) == doctest::Approx(300e-6));
    CHECK(d.tphi(0.5 * d.chi_max) == doctest::Approx(0.5 * (1.0 + 300e-6)));
    CHECK(d.tphi(2.0 * d.chi_max) == doctest::Approx(300e-6));
    DampingModel bad = d;
    bad.t1 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("RK4 basics") {
    double y = 1.0;
    Rk4<double> rk;
    rk.step(y, 0.0, 0.1, [](double, double v, double& dv) { dv = -v; });
    CHECK(std::abs(y - std::exp(-0.1)) <= 1e-7);

    Vector v = Vector::Random(5);
    const Vector v0 = v;
    Rk4<Vector> rv;
    rv.step(v, 0.0, 1.0, [](double, const Vector& x, Vector& dx) { dx = Vector::Zero(x.size()); });
    CHECK(v == v0);

    double blow = 1.0;
    CHECK_THROWS_AS(rk.step(blow, 0.0, 1.0, [](double, double, double& dv) { dv = std::numeric_limits<double>::infinity(); }, 42),
                    NumericalError);
    CHECK_THROWS_AS(rk.step(blow, 0.0, 0.0, [](double, double, double& dv) { dv = 0.0; }), DomainError);
}

TEST_CASE("RK4 against the exponential for a constant Hamiltonian") {
    const auto b = ring(3, 3);
    const auto h = build_hamiltonian(b, HamiltonianParams::uniform(3, 100 * kMHz, 30 * kMHz));
    const Eigen::MatrixXcd hd = h.dense();
    Vector psi = embed_input_state(InputState({{2, 1.0}, {3, 1.0}}), b, 0).vector();
    const Vector start = psi;
    const double dt = 1e-12;
    Rk4<Vector> rk;
    for (int k = 0; k < 1000; ++k)
        rk.step(psi, k * dt, dt, [&](double, const Vector& y, Vector& dy) { dy = cplx(0, -1) * (h.matrix() * y); });
    CHECK((psi - propagate(hd, start, 1000 * dt)).norm() <= 1e-8);
}

TEST_CASE("exponential oracle") {
    const auto b = ring(3, 3);
    const auto h = build_hamiltonian(b, HamiltonianParams::uniform(3, 100 * kMHz, 30 * kMHz));
    const auto psi = embed_input_state(InputState({{3, 1.0}}), b, 0);
    const auto one = exponential_oracle(psi, h, 0.0, 7e-9, 1);
    const auto many = exponential_oracle(psi, h, 0.0, 7e-9, 50);
    CHECK((one.vector() - many.vector()).norm() <= 1e-12);
    CHECK(std::abs(many.vector().norm() - 1.0) <= 1e-13);
    CHECK((one.vector() - propagate(h.dense(), psi.vector(), 7e-9)).norm() <= 1e-12);
    const auto big = ring(3, 8);
    CHECK_THROWS_AS(exponential_oracle(embed_input_state(InputState({{3, 1.0}}), big, 0),
                                       build_hamiltonian(big, HamiltonianParams::uniform(3, 1.0, 1.0)), 0.0, 1e-9, 1),
                    ResourceError);
}

TEST_CASE("closed sector evolution") {
    const auto b = ring(3, 3);
    const ParametricHamiltonian ph(b, {0.0, 0.0, 0.0});
    const auto psi = embed_input_state(InputState({{2, 1.0}}), b, 0);

    SUBCASE("without hopping a localized Fock state only picks up a phase") {
        const auto s = build_schedule(100 * kMHz, 30 * kMHz, kShort);
        const auto r = evolve_closed_sector(psi, 2, ph, s, 0.0, s.end_of(1));
        const auto idx = b->sector_indices(2);
        Vector full = Vector::Zero(64);
        for (std::size_t i = 0; i < idx.size(); ++i) full[static_cast<Eigen::Index>(idx[i])] = r.state[static_cast<Eigen::Index>(i)];
        CHECK(std::norm(psi.vector().dot(full)) == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("Kerr phase of a single site at constant chi") {
        const auto one = ring(1, 3);
        const ParametricHamiltonian single(one, {0.0});
        const double chi = 100 * kMHz;
        const auto s = build_schedule(chi, 30 * kMHz, kShort);
        const double t0 = s.end_of(5), t1 = s.end_of(6);
        for (int n = 2; n <= 3; ++n) {
            const auto in = embed_input_state(InputState({{n, 1.0}}), one, 0);
            const auto r = evolve_closed_sector(in, n, single, s, t0, t1);
            const double expected = chi * n * (n - 1) / 2.0 * (t1 - t0);
            CHECK(std::abs(std::remainder(std::arg(r.state[0]) - expected, 2 * std::numbers::pi)) < 1e-8);
            CHECK(std::abs(r.ledger.final_phase() - r.ledger.samples.front().phase - expected) < 1e-8);
        }
    }

    SUBCASE("leakage is rejected") {
        const auto s = build_schedule(100 * kMHz, 30 * kMHz, kShort);
        const auto mixed = embed_input_state(InputState({{2, 1.0}, {3, 1.0}}), b, 0);
        CHECK_THROWS_AS(evolve_closed_sector(mixed, 2, ph, s, 0.0, 1e-9), InvariantError);
    }
}

TEST_CASE("norm conservation over a million steps") {
    const auto b = ring(3, 2);
    const ParametricHamiltonian ph(b, {0.0, 0.0, 0.0});
    const auto idx = b->sector_indices(2);
    const auto sub = ph.restricted(idx);
    const StepDurations d{3e-9, 300e-9, 300e-9, 3e-9, 300e-9, 91e-9, 3e-9};
    const auto s = build_schedule(100 * kMHz, 30 * kMHz, d);
    Vector psi = Vector::Zero(static_cast<Eigen::Index>(idx.size()));
    psi[static_cast<Eigen::Index>(idx.size() - 1)] = 1.0;
    ClosedEvolutionOptions o;
    o.ledger_stride = 0;
    const auto r = evolve_sector_vector(psi, 2, sub, s, 0.0, s.total_time(), o);
    CHECK(s.total_time() / o.dt >= 1e6 - 1.0);
    CHECK(std::abs(r.state.norm() - 1.0) <= 1e-8);
}

TEST_CASE("open engine reduces to the closed one without damping") {
    const auto b = ring(3, 3);
    const ParametricHamiltonian ph(b, {0.0, 0.0, 0.0});
    const auto s = build_schedule(100 * kMHz, 30 * kMHz, kShort);
    const auto psi = embed_input_state(InputState({{3, 1.0}}), b, 0);
    const double t1 = s.end_of(3);
    OpenEvolutionOptions oo;
    oo.target = psi;
    const auto open = evolve_open(QuantumState::to_density(psi), ph, s, 0.0, t1, std::nullopt, oo);
    const auto closed = evolve_closed_sector(psi, 3, ph, s, 0.0, t1);
    const auto idx = b->sector_indices(3);
    Vector full = Vector::Zero(64);
    for (std::size_t i = 0; i < idx.size(); ++i) full[static_cast<Eigen::Index>(idx[i])] = closed.state[static_cast<Eigen::Index>(i)];
    CHECK(fidelity(open.state, QuantumState::pure(b, full)) >= 1.0 - 1e-8);
    CHECK(open.trajectory.samples.front().t == 0.0);
    CHECK(open.trajectory.samples.back().t == doctest::Approx(t1));
    CHECK(open.trajectory.max_trace_drift <= 1e-10);
}

TEST_CASE("amplitude damping of the total number") {
    const auto b = ring(2, 3);
    DampingModel d;
    d.chi_max = 1.0;
    const LindbladGenerator gen(b, d);
    Matrix rho = QuantumState::to_density(embed_input_state(InputState({{3, 1.0}, {2, 0.5}}), b, 0)).matrix();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(16);
    const SparseMatrix hop(16, 16);
    auto mean = [&](const Matrix& m) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < 16; ++i) s += b->total(static_cast<std::size_t>(i)) * m(i, i).real();
        return s;
    };
    const double n0 = mean(rho), dt = 20e-9;
    Rk4<Matrix> rk;
    double worst = 0.0;
    for (int i = 1; i <= 3000; ++i) {
        rk.step(rho, (i - 1) * dt, dt, [&](double, const Matrix& y, Matrix& out) { gen.apply(y, zero, 0.0, hop, 0.0, 0.0, out); });
        worst = std::max(worst, std::abs(mean(rho) / (n0 * std::exp(-i * dt / d.t1)) - 1.0));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("eigen tracker keeps a continuous phase") {
    Eigen::MatrixXcd h(2, 2);
    h << 0.0, 1.0, 1.0, 0.0;
    EigenTracker tr;
    Vector psi(2);
    psi << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
    tr.reset(h, psi);
    CHECK(tr.energy() == doctest::Approx(-1.0));
    for (int k = 1; k <= 50; ++k) {
        const Vector before = tr.reference();
        Eigen::MatrixXcd hk(2, 2);
        hk << 0.02 * k, 1.0, 1.0, -0.02 * k;
        tr.update(hk);
        CHECK(std::abs(before.dot(tr.reference()) - 1.0) < 0.01);
    }
}
