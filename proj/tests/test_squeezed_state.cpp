#include <doctest.h>

#include <cmath>

#include "common/oracles.hpp"
#include "sqz/errors.hpp"
#include "sqz/squeezed_state.hpp"

using namespace sqz;

TEST_CASE("squeeze parameters") {
    const SqueezeParams p{0.8, 0.3};
    CHECK(p.c() >= 1.0);
    CHECK(std::abs(p.c() * p.c() - p.s() * p.s() - 1.0) < 1e-12);
    CHECK(std::abs(p.gamma() - 0.4 * std::exp(-0.6 * kI)) < 1e-15);
}

TEST_CASE("zero squeezing is the identity") {
    for (int n : {0, 1, 3}) {
        const CoefficientTable t = squeeze_coefficients_fixed(n, {0.0, 0.4}, 12);
        for (int m = 0; m <= 12; ++m) CHECK(std::abs(t[m] - (m == n ? 1.0 : 0.0)) < 1e-15);
        CHECK(std::abs(t.deficit) < 1e-15);
    }
}

TEST_CASE("squeezed vacuum against the Hermite closed form") {
    CHECK(oracle::hermite_even_at_zero(0) == 1);
    CHECK(oracle::hermite_even_at_zero(1) == -2);
    CHECK(oracle::hermite_even_at_zero(2) == 12);
    CHECK(oracle::hermite_even_at_zero(3) == -120);
    for (double r : {0.2, 0.5, 1.0}) {
        for (double phi : {0.0, 0.7}) {
            const CoefficientTable t = squeeze_coefficients(0, {r, phi});
            CHECK(std::abs(t[0] - 1.0 / std::sqrt(std::cosh(r))) < 1e-12);
            const StateVector ref = oracle::squeezed_vacuum(r, phi, t.m_cut);
            CHECK((t.a - ref).cwiseAbs().maxCoeff() < 1e-10);
            for (int m = 1; m <= t.m_cut; m += 2) CHECK(t[m] == cplx(0.0));
        }
    }
}

TEST_CASE("squeezed number states against the ladder construction") {
    const CoefficientTable t = squeeze_coefficients_fixed(1, {0.5, 0.0}, 40);
    const StateVector ref = oracle::squeezed_number(1, 0.5, 0.0, 40);
    CHECK((t.a - ref).cwiseAbs().maxCoeff() < 1e-10);
    for (int n : {2, 3}) {
        const CoefficientTable u = squeeze_coefficients(n, {0.9, 1.1});
        const StateVector v = oracle::squeezed_number(n, 0.9, 1.1, u.m_cut);
        CHECK((u.a - v).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("parity selection rule is exact") {
    for (int n : {0, 1, 2, 3}) {
        const CoefficientTable t = squeeze_coefficients(n, {0.7, 0.2});
        for (int m = 0; m <= t.m_cut; ++m)
            if ((m - n) % 2 != 0) CHECK(t[m] == cplx(0.0));
    }
}

TEST_CASE("auto escalation reaches the deficit target") {
    const CoefficientTable t = squeeze_coefficients(2, {1.0, 0.0}, 10, 1e-8);
    CHECK(t.deficit < 1e-8);
    CHECK(t.deficit > -1e-12);
    CHECK(t.m_cut > 10);
    CHECK_THROWS_AS(squeeze_coefficients(0, {3.0, 0.0}, 0, 1e-12), IntegrityError);
    CHECK_THROWS_AS(squeeze_coefficients_fixed(5, {0.1, 0.0}, 4), ValidationError);
    CHECK_THROWS_AS(squeeze_coefficients(-1, {0.1, 0.0}), ValidationError);
}

TEST_CASE("recurrence between neighbouring photon numbers") {
    SUBCASE("no squeezing") {
        const auto family = coefficient_family(3, {0.0, 0.0}, 12);
        for (int n = 0; n <= 2; ++n) CHECK(check_recurrence(family, n) == 0.0);
    }
    SUBCASE("interior residuals") {
        for (double r : {0.3, 0.6, 1.0}) {
            const auto family = coefficient_family(5, {r, 0.4});
            const int m_max = family.at(0).m_cut - 5;
            for (int n = 0; n <= 4; ++n) CHECK(check_recurrence(family, n, m_max) < 1e-10);
        }
    }
    SUBCASE("corruption is detected") {
        auto family = coefficient_family(3, {0.3, 0.0});
        family.at(1).a(2) += 1e-3;
        CHECK(check_recurrence(family, 1) >= 1e-3 * std::sqrt(3.0) / 2.0);
    }
    SUBCASE("missing neighbours") {
        auto family = coefficient_family(2, {0.3, 0.0});
        family.erase(0);
        CHECK_THROWS_AS(check_recurrence(family, 1), ValidationError);
        CHECK_THROWS_AS(check_recurrence(family, 2), ValidationError);
    }
}

TEST_CASE("squeezed number states are orthonormal") {
    const auto family = coefficient_family(4, {0.8, 0.5});
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= 4; ++j) {
            const cplx overlap = family.at(i).a.dot(family.at(j).a);
            CHECK(std::abs(overlap - (i == j ? 1.0 : 0.0)) < 1e-8);
        }
}

TEST_CASE("field statistics") {
    SUBCASE("closed forms") {
        const auto f = field_statistics_closed_form(1, {std::asinh(1.0), 0.0});
        CHECK(f.mean_photons == doctest::Approx(4.0).epsilon(1e-14));
        const auto v = field_statistics_closed_form(0, {0.0, 0.0});
        CHECK(v.mean_photons == 0.0);
        CHECK(v.var_x == 1.0);
        CHECK(v.var_y == 1.0);
    }
    SUBCASE("table route") {
        for (int n = 0; n <= 3; ++n)
            for (double r : {0.0, 0.4, 0.7, 1.0}) {
                const auto cmp = field_statistics(n, {r, 0.0});
                CHECK(std::abs(cmp.closed_form.mean_photons - cmp.from_table.mean_photons) < 1e-8);
                CHECK(std::abs(cmp.closed_form.var_x - cmp.from_table.var_x) < 1e-8);
                CHECK(std::abs(cmp.closed_form.var_y - cmp.from_table.var_y) < 1e-8);
            }
    }
}

TEST_CASE("coefficient tables round-trip through JSON") {
    const CoefficientTable t = squeeze_coefficients(1, {0.5, 0.25});
    const CoefficientTable back = coefficient_table_from_json(to_json(t));
    CHECK(back.n == 1);
    CHECK(back.m_cut == t.m_cut);
    CHECK(back.params.phi == 0.25);
    CHECK((back.a - t.a).norm() == 0.0);
    nlohmann::json bad = to_json(t);
    bad["a"].erase(0);
    CHECK_THROWS_AS(coefficient_table_from_json(bad), ValidationError);
}
