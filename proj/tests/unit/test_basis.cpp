#include <doctest.h>

#include <random>
#include <set>

#include "abhsim/basis.hpp"
#include "abhsim/errors.hpp"
#include "abhsim/state.hpp"

using namespace abhsim;

namespace {

BasisPtr ring(int m, int cap) { return build_basis(LatticeSpec{m, cap, std::nullopt}); }

Vector random_vector(std::size_t n, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> d;
    Vector v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = cplx(d(gen), d(gen));
    return v.normalized();
}

Matrix random_density(std::size_t n, unsigned seed) {
    Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index c = 0; c < a.cols(); ++c) a.col(c) = random_vector(n, seed + static_cast<unsigned>(c));
    Matrix rho = a * a.adjoint();
    return rho / rho.trace().real();
}

}  // namespace

TEST_CASE("dimensions") {
    CHECK(ring(3, 3)->dimension() == 64);
    const auto vac = ring(1, 0);
    REQUIRE(vac->dimension() == 1);
    CHECK(vac->state(0) == Occupation{0});
    CHECK(ring(4, 2)->dimension() == 81);
}

TEST_CASE("total cap enumeration matches brute force") {
    const auto b = build_basis(LatticeSpec{2, 2, 2});
    std::set<Occupation> expected;
    for (int a = 0; a <= 2; ++a)
        for (int c = 0; c <= 2; ++c)
            if (a + c <= 2) expected.insert({a, c});
    CHECK(b->dimension() == 6);
    CHECK(std::set<Occupation>(b->states().begin(), b->states().end()) == expected);
}

TEST_CASE("lexicographic order and index round trip") {
    const auto b = ring(3, 3);
    for (std::size_t i = 0; i < b->dimension(); ++i) {
        CHECK(b->index_of(b->state(i)) == i);
        if (i > 0) CHECK(b->state(i - 1) < b->state(i));
    }
    CHECK(b->state(0) == Occupation{0, 0, 0});
    CHECK_FALSE(b->index_of(Occupation{4, 0, 0}).has_value());
    CHECK(b->sector_indices(2).size() == 6);
}

TEST_CASE("invalid specs and resource limit") {
    CHECK_THROWS_AS(build_basis(LatticeSpec{0, 1, std::nullopt}), ConfigError);
    CHECK_THROWS_AS(build_basis(LatticeSpec{2, -1, std::nullopt}), ConfigError);
    CHECK_THROWS_AS(build_basis(LatticeSpec{2, 2, 5}), ConfigError);
    CHECK_THROWS_AS(build_basis(LatticeSpec{10, 9, std::nullopt}), ResourceError);
}

TEST_CASE("embed input state") {
    const auto b = ring(3, 3);
    const auto s = embed_input_state(InputState({{2, 1.0}}), b, 0);
    CHECK(s.vector()[static_cast<Eigen::Index>(*b->index_of(Occupation{2, 0, 0}))] == cplx(1.0));

    const InputState mix({{2, 1.0}, {3, 1.0}});
    CHECK(mix.original_norm() == doctest::Approx(std::sqrt(2.0)));
    const auto m = embed_input_state(mix, b, 0);
    CHECK(m.vector().norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(m.vector()[static_cast<Eigen::Index>(*b->index_of(Occupation{3, 0, 0}))]) ==
          doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(m.site_occupation(0) == doctest::Approx(2.5));
    CHECK(m.site_occupation(1) == 0.0);
    CHECK(m.site_occupation(2) == 0.0);

    const auto on_last = embed_input_state(mix, b, 2);
    CHECK(on_last.site_occupation(2) == doctest::Approx(2.5));
    CHECK(on_last.site_occupation(0) == 0.0);

    CHECK_THROWS_AS(embed_input_state(InputState({{4, 1.0}}), b, 0), TruncationError);
    CHECK_THROWS_AS(InputState({{2, 0.0}}), ConfigError);
    CHECK_THROWS_AS(InputState({{-1, 1.0}}), ConfigError);
    CHECK(InputState({{0, 1.0}, {2, 1.0}}).low_occupation_weight() == doctest::Approx(0.5));
}

TEST_CASE("fidelity") {
    const auto b = ring(3, 3);
    auto fock = [&](Occupation o) {
        Vector v = Vector::Zero(64);
        v[static_cast<Eigen::Index>(*b->index_of(o))] = 1.0;
        return QuantumState::pure(b, v);
    };
    const auto psi = QuantumState::pure(b, random_vector(64, 1));
    CHECK(fidelity(psi, psi) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(fidelity(fock({2, 0, 0}), fock({0, 2, 0})) == 0.0);

    Matrix rho = 0.5 * (fock({2, 0, 0}).vector() * fock({2, 0, 0}).vector().adjoint() +
                        fock({0, 2, 0}).vector() * fock({0, 2, 0}).vector().adjoint());
    CHECK(fidelity(QuantumState::density(b, rho), fock({2, 0, 0})) == doctest::Approx(0.5));

    const auto phased = QuantumState::pure(b, psi.vector() * std::polar(1.0, 0.7));
    const auto other = QuantumState::pure(b, random_vector(64, 2));
    CHECK(fidelity(phased, other) == doctest::Approx(fidelity(psi, other)).epsilon(1e-13));
    CHECK(fidelity(other, phased) == doctest::Approx(fidelity(other, psi)).epsilon(1e-13));

    CHECK_THROWS_AS(fidelity(psi, QuantumState::pure(ring(2, 3), random_vector(16, 3))), DimensionError);
}

TEST_CASE("partial trace") {
    const auto b = ring(2, 3);
    Vector v = Vector::Zero(16);
    v[static_cast<Eigen::Index>(*b->index_of(Occupation{2, 0}))] = 1.0;
    const auto reduced = partial_trace(QuantumState::pure(b, v), {0});
    Matrix expected = Matrix::Zero(4, 4);
    expected(2, 2) = 1.0;
    CHECK((reduced.matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);

    // W state of n quanta, keep the first two sites. Hand-written expectation
    // on the (n1, n2) basis with cap 3: index = 4 n1 + n2.
    const auto b3 = ring(3, 3);
    for (int n = 1; n <= 3; ++n) {
        Vector w = Vector::Zero(64);
        for (Occupation o : {Occupation{n, 0, 0}, Occupation{0, n, 0}, Occupation{0, 0, n}})
            w[static_cast<Eigen::Index>(*b3->index_of(o))] = 1.0 / std::sqrt(3.0);
        const auto r = partial_trace(QuantumState::pure(b3, w), {0, 1});
        Matrix e = Matrix::Zero(16, 16);
        const Eigen::Index n0 = 4 * n, zero_n = n;
        e(n0, n0) = e(zero_n, zero_n) = e(n0, zero_n) = e(zero_n, n0) = 1.0 / 3.0;
        e(0, 0) = 1.0 / 3.0;
        CHECK((r.matrix() - e).cwiseAbs().maxCoeff() < 1e-14);
    }

    const auto rho = QuantumState::density(b3, random_density(64, 10));
    for (const std::set<int>& keep : {std::set<int>{0}, std::set<int>{1, 2}, std::set<int>{0, 1, 2}})
        CHECK(partial_trace(rho, keep).trace() == doctest::Approx(rho.trace()).epsilon(1e-12));

    const auto step = partial_trace(partial_trace(rho, {0, 1}), {0});
    const auto direct = partial_trace(rho, {0});
    CHECK((step.matrix() - direct.matrix()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("purity") {
    const auto b = ring(2, 2);
    CHECK(purity(QuantumState::pure(b, random_vector(9, 4))) == 1.0);
    CHECK(purity(QuantumState::density(b, Matrix::Identity(9, 9) / 9.0)) == doctest::Approx(1.0 / 9.0));
    Matrix rho = Matrix::Zero(9, 9);
    rho(1, 1) = rho(4, 4) = 0.5;
    CHECK(purity(QuantumState::density(b, rho)) == doctest::Approx(0.5));
}

TEST_CASE("density validation") {
    const auto b = ring(2, 2);
    Matrix rho = random_density(9, 20);
    CHECK(QuantumState::density(b, rho).validate().empty());
    rho(0, 1) += 1e-6;
    CHECK_FALSE(QuantumState::density(b, rho).validate().empty());
    CHECK(hermiticity_defect(rho) == doctest::Approx(1e-6).epsilon(1e-3));
}
