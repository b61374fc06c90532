#include <doctest.h>

#include <cmath>

#include "sqz/errors.hpp"
#include "sqz/hilbert.hpp"

using namespace sqz;

TEST_CASE("ladder operators satisfy the truncated commutator") {
    const Index d = 6;
    const Operator b = make_annihilation(d);
    const Operator comm = commutator(b, make_creation(d));
    for (Index i = 0; i + 1 < d; ++i) CHECK(std::abs(comm(i, i) - 1.0) < 1e-14);
    CHECK(std::abs(comm(d - 1, d - 1) + double(d - 1)) < 1e-12);
    CHECK((make_creation(d) * b - make_number(d)).norm() < 1e-13);
    CHECK_THROWS_AS(make_annihilation(1), ValidationError);
}

TEST_CASE("two-level operators") {
    const Operator sm = sigma_minus();
    CHECK(sm(0, 1) == cplx(1.0));
    CHECK((sm + sm.adjoint() - sigma_x()).norm() == 0.0);
}

TEST_CASE("kron orders the first factor as the slow index") {
    const Operator a = make_annihilation(2);
    const Operator id3 = identity(3);
    const Operator k = kron(a, id3);
    CHECK(k.rows() == 6);
    CHECK(k(0, 3) == cplx(1.0));
    CHECK(k(1, 4) == cplx(1.0));
}

TEST_CASE("matrix exponential") {
    SUBCASE("diagonal generator") {
        const Operator n = make_number(4);
        const Operator u = matrix_exponential(n, -kI * 0.3);
        for (Index m = 0; m < 4; ++m)
            CHECK(std::abs(u(m, m) - std::exp(-kI * 0.3 * double(m))) < 1e-14);
        CHECK(unitarity_defect(u) < 1e-13);
    }
    SUBCASE("Pauli rotation") {
        const Operator u = matrix_exponential(sigma_x(), -kI * 0.7);
        CHECK(std::abs(u(0, 0) - std::cos(0.7)) < 1e-14);
        CHECK(std::abs(u(0, 1) + kI * std::sin(0.7)) < 1e-14);
    }
    SUBCASE("non-finite input is an integrity failure") {
        Operator bad = identity(2);
        bad(0, 0) = std::nan("");
        CHECK_THROWS_AS(matrix_exponential(bad, 1.0), IntegrityError);
    }
}

TEST_CASE("trace norm and distance") {
    Operator rho = Operator::Zero(2, 2);
    rho(0, 0) = 1.0;
    Operator sigma = Operator::Zero(2, 2);
    sigma(1, 1) = 1.0;
    CHECK(trace_distance(rho, sigma) == doctest::Approx(1.0));
    CHECK(trace_distance(rho, rho) == 0.0);
    Operator h(2, 2);
    h << 1.0, 0.5, 0.5, -2.0;
    // eigenvalues (-1 +- sqrt(10)) / 2
    CHECK(trace_norm(h) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-14));
    CHECK_THROWS_AS(trace_distance(identity(2), identity(3)), ValidationError);
}

TEST_CASE("hermiticity checks") {
    Operator h = make_number(3) + make_annihilation(3) + make_creation(3);
    CHECK(is_hermitian(h, 1e-15));
    h(0, 1) += 1e-6;
    CHECK(hermiticity_defect(h) == doctest::Approx(1e-6));
    CHECK_FALSE(is_hermitian(h, 1e-9));
}

TEST_CASE("anticommutator and trace") {
    const Operator b = make_annihilation(3);
    const Operator ac = anticommutator(b, b.adjoint());
    CHECK(std::abs(trace(ac) - 2.0 * trace(make_number(3))) < 1e-13);
    CHECK((projector(basis_state(3, 1)) - make_number(3) + 2.0 * projector(basis_state(3, 2))).norm() < 1e-14);
}
