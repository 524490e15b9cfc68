#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <numbers>
#include <sstream>

#include "abhsim/errors.hpp"
#include "abhsim/spectra.hpp"

using namespace abhsim;

namespace {

constexpr double kMHz = 2.0 * std::numbers::pi * 1e6;

BasisPtr ring(int m, int cap) { return build_basis(LatticeSpec{m, cap, std::nullopt}); }

Eigen::Index at(const BasisPtr& b, Occupation o) { return static_cast<Eigen::Index>(*b->index_of(o)); }

}  // namespace

TEST_CASE("tau") {
    CHECK(tau(30 * kMHz, 14 * kMHz, 2) == doctest::Approx(30.0 / 14.0));
    CHECK(tau(0.0, 14 * kMHz, 3) == 0.0);
    CHECK(tau(-30 * kMHz, 14 * kMHz, 2) == tau(30 * kMHz, 14 * kMHz, 2));
    CHECK_THROWS_AS(tau(1.0, 0.0, 2), DomainError);
    CHECK_THROWS_AS(tau(1.0, 1.0, 1), DomainError);
}

TEST_CASE("tau2") {
    CHECK(tau2(2).value == 0.25);
    CHECK_FALSE(tau2(2).approximate);
    CHECK(tau2(5).value == doctest::Approx(1.0 / (10.0 * std::pow(std::sin(std::numbers::pi / 5), 2))));
    CHECK(tau2(5).value == doctest::Approx(0.2894).epsilon(1e-4));
    CHECK(tau2(42).value == doctest::Approx(2.13).epsilon(2e-3));
    for (int m : {3, 4}) {
        CHECK(tau2(m).approximate);
        CHECK(tau2(m).value > 0.0);
        CHECK(tau2(m).value <= kTau2SmallRingCeiling);
    }
    for (int m = 2; m <= 100; ++m) CHECK(tau2(m).value >= kTau1);
    CHECK_THROWS_AS(tau2(1), DomainError);
}

TEST_CASE("W states") {
    const auto b2 = ring(2, 2);
    const auto w = w_state(b2, 2, 0).vector();
    CHECK(std::abs(w[at(b2, {2, 0})] - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(w[at(b2, {0, 2})] - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(w.norm() == doctest::Approx(1.0));

    const auto b = ring(3, 3);
    const double chi = 100 * kMHz;
    const auto h = build_hamiltonian(b, HamiltonianParams::uniform(3, chi, 0.0));
    const Vector w0 = w_state(b, 2, 0).vector();
    CHECK((h.apply(w0) + chi * w0).norm() <= 1e-12 * chi);

    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
            const cplx ip = w_state(b, 2, k).vector().dot(w_state(b, 2, l).vector());
            CHECK(std::abs(ip - (k == l ? 1.0 : 0.0)) < 1e-14);
        }
    CHECK_THROWS_AS(w_state(ring(3, 2), 3, 0), TruncationError);
}

TEST_CASE("superfluid state") {
    const auto b2 = ring(2, 1);
    const auto s1 = superfluid_state(b2, 1).state.vector();
    CHECK(std::abs(s1[at(b2, {1, 0})] - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(s1[at(b2, {0, 1})] - 1.0 / std::sqrt(2.0)) < 1e-15);

    const auto b = ring(3, 3);
    const double kappa = 30 * kMHz;
    const auto p = HamiltonianParams::uniform(3, 0.0, kappa);
    const auto h = build_hamiltonian(b, p);
    for (int n = 2; n <= 3; ++n) {
        const auto sf = superfluid_state(b, n);
        CHECK(sf.kept_probability == doctest::Approx(1.0));
        const auto spec = diagonalize_sector(b, p, n);
        const auto ground = spec.eigenstate(b, 0);
        CHECK(std::norm(ground.vector().dot(sf.state.vector())) == doctest::Approx(1.0).epsilon(1e-12));
        const double e = sf.state.vector().dot(h.apply(sf.state.vector())).real();
        CHECK(e == doctest::Approx(-2.0 * kappa * n).epsilon(1e-12));
    }
    // Two bosons: (1/3)(1/sqrt 2)(sum_j c_j^dag)^2 |vac> gives 1/3 on |2>_j and sqrt(2)/3 on pairs.
    const auto sf2 = superfluid_state(b, 2).state.vector();
    CHECK(std::abs(sf2[at(b, {2, 0, 0})] - 1.0 / 3.0) < 1e-14);
    CHECK(std::abs(sf2[at(b, {1, 1, 0})] - std::sqrt(2.0) / 3.0) < 1e-14);

    CHECK_THROWS_AS(superfluid_state(ring(3, 1), 3), TruncationError);
}

TEST_CASE("sector diagonalization") {
    const auto b = ring(3, 3);
    const double chi = 100 * kMHz, kappa = 30 * kMHz;
    for (int n = 2; n <= 3; ++n) {
        const auto s = diagonalize_sector(b, HamiltonianParams::uniform(3, chi, 0.0), n);
        const double e0 = -chi * n * (n - 1) / 2.0;
        for (int i = 0; i < 3; ++i) CHECK(s.eigenvalues(i) == doctest::Approx(e0).epsilon(1e-13));
        CHECK(s.eigenvalues(3) > e0 + 1e-3 * chi);
        for (Eigen::Index i = 1; i < s.eigenvalues.size(); ++i) CHECK(s.eigenvalues(i) >= s.eigenvalues(i - 1));
        const auto& v = *s.eigenvectors;
        CHECK((v.adjoint() * v - Eigen::MatrixXcd::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff() < 1e-10);

        const auto split = diagonalize_sector(b, HamiltonianParams::uniform(3, chi, 1e-3 * kappa), n, false);
        CHECK(split.eigenvalues(2) - split.eigenvalues(0) > 1e-12 * chi);

        const auto free = diagonalize_sector(b, HamiltonianParams::uniform(3, 0.0, kappa), n, false);
        CHECK(free.eigenvalues(0) == doctest::Approx(-2.0 * kappa * n).epsilon(1e-12));
    }
    CHECK_THROWS_AS(diagonalize_sector(b, HamiltonianParams::uniform(3, chi, 0.0), 10), DomainError);
}

TEST_CASE("localized state follows the lowest level along a negative hopping ramp") {
    // Continuation of |N>_1 in the single-site Kerr model while kappa goes
    // from 0 to -kappa_max: the max-overlap eigenvector is tracked step by step.
    const auto b = ring(3, 3);
    const double chi = 100 * kMHz, kmax = 30 * kMHz;
    for (int n = 2; n <= 3; ++n) {
        const auto idx = b->sector_indices(n);
        Vector ref = Vector::Zero(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i)
            if (b->occupation(idx[i], 0) == n) ref[static_cast<Eigen::Index>(i)] = 1.0;
        Eigen::Index level = -1;
        for (int step = 1; step <= 200; ++step) {
            const auto s = diagonalize_sector(b, HamiltonianParams::single_site(3, chi, -kmax * step / 200.0), n);
            Eigen::Index best = 0;
            double overlap = -1.0;
            for (Eigen::Index k = 0; k < s.eigenvectors->cols(); ++k) {
                const double o = std::norm(s.eigenvectors->col(k).dot(ref));
                if (o > overlap) {
                    overlap = o;
                    best = k;
                }
            }
            CHECK(overlap > 0.5);
            ref = s.eigenvectors->col(best);
            level = best;
        }
        CHECK(level == 0);
    }
}

TEST_CASE("mode populations") {
    const auto b = ring(3, 3);
    for (int n = 1; n <= 3; ++n) {
        const auto sf = mode_populations(superfluid_state(b, n).state);
        CHECK(sf[0] == doctest::Approx(n).epsilon(1e-12));
        CHECK(std::abs(sf[1]) < 1e-12);
        CHECK(std::abs(sf[2]) < 1e-12);

        Vector loc = Vector::Zero(64);
        loc[at(b, {n, 0, 0})] = 1.0;
        for (double p : mode_populations(QuantumState::pure(b, loc))) CHECK(p == doctest::Approx(n / 3.0));
    }
    const auto psi = QuantumState::pure(b, Vector::Random(64).normalized());
    double sum = 0.0;
    for (double p : mode_populations(psi)) sum += p;
    CHECK(sum == doctest::Approx(psi.total_occupation()).epsilon(1e-10));
}

TEST_CASE("phase scan of the three-site ring") {
    const auto b = ring(3, 3);
    const double chi = 100 * kMHz;
    std::vector<double> taus;
    for (int i = 0; i <= 20; ++i) taus.push_back(0.05 * i);
    const auto rows = phase_scan(b, chi, 3, taus);
    CHECK(rows.front().w_fidelity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rows.front().ground_energy == doctest::Approx(-3.0 * chi));
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].w_fidelity < rows[i - 1].w_fidelity);

    const auto deep = phase_scan(b, chi, 3, {50.0});
    CHECK(std::abs(deep[0].q0_population - 3.0) <= 0.02 * 3.0);

    std::ostringstream csv;
    write_phase_scan_csv(csv, rows);
    CHECK(csv.str().rfind("tau,ground_energy,w_fidelity,q0_population\n", 0) == 0);
}

TEST_CASE("eigenvector phase convention") {
    Eigen::MatrixXcd v(2, 2);
    v << cplx(0, -0.8), cplx(0.6, 0), cplx(0, 0.6), cplx(0.8, 0);
    fix_eigenvector_phases(v);
    CHECK(std::abs(v(0, 0) - 0.8) < 1e-15);
    CHECK(std::abs(v(1, 1) - 0.8) < 1e-15);
}
