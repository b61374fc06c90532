#include <doctest.h>

#include <cmath>

#include "sqz/errors.hpp"
#include "sqz/pulse.hpp"
#include "sqz/quadrature.hpp"

using namespace sqz;

TEST_CASE("flat profile on four bins") {
    const PulseGrid g = discretize(ProfileSpec{"flat", {}}, 0.0, 1.0, 4);
    CHECK(g.tau == doctest::Approx(0.25));
    for (const auto& x : g.xi) CHECK(std::abs(x - 1.0) < 1e-14);
    CHECK(tail_norm(g, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(tail_norm(g, 4) == 0.0);
    CHECK(tail_norm(g, 2) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(tail_norm(g, 5), ValidationError);
    CHECK_THROWS_AS(tail_norm(g, -1), ValidationError);
}

TEST_CASE("rising exponential matches its closed form") {
    const PulseGrid g = discretize(ProfileSpec{"rising_exp", {{"rate", 1.0}}}, 0.0, 1.0, 200);
    double norm = 0.0;
    for (int k = 0; k < g.M; ++k) {
        const double s = g.t0 + (k + 0.5) * g.tau;
        const double expected = std::sqrt(1.0 / (std::exp(1.0) - 1.0)) * std::exp(s / 2.0);
        // renormalization only removes the O(tau^2) midpoint bias
        CHECK(std::abs(g.xi[k] - expected * g.renormalization) < 1e-14);
        norm += g.tau * std::norm(g.xi[k]);
    }
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(g.renormalization - 1.0) < 1e-5);
}

TEST_CASE("narrow Gaussian needs almost no renormalization") {
    const double T = 10.0;
    const PulseGrid g =
        discretize(ProfileSpec{"gaussian", {{"center", T / 2}, {"sigma", T / 20}}}, 0.0, T, 1000);
    CHECK(std::abs(g.renormalization - 1.0) < 1e-4);
    CHECK(g.outside_mass < 1e-15);
    // the same profile on a window that cuts it reports the lost mass
    const PulseGrid cut = discretize(ProfileSpec{"gaussian", {{"center", 0.0}, {"sigma", 1.0}}},
                                     0.0, 10.0, 1000);
    CHECK(cut.outside_mass == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("tail differences reproduce bin masses") {
    for (const auto& spec : {ProfileSpec{"gaussian", {{"sigma", 0.7}}},
                             ProfileSpec{"decaying_exp", {{"rate", 2.0}}},
                             ProfileSpec{"rising_exp", {{"rate", 3.0}}}}) {
        const PulseGrid g = discretize(spec, -1.0, 4.0, 257);
        for (int j = 0; j < g.M; ++j) {
            CHECK(tail_norm(g, j) >= tail_norm(g, j + 1));
            CHECK(std::abs(tail_norm(g, j) - tail_norm(g, j + 1) - g.tau * std::norm(g.xi[j])) <
                  1e-12);
        }
        CHECK(std::abs(tail_norm(g, 0) - 1.0) < 1e-12);
    }
}

TEST_CASE("discretize is deterministic") {
    const ProfileSpec spec{"gaussian", {{"center", 1.3}, {"sigma", 0.4}}};
    const PulseGrid a = discretize(spec, 0.0, 3.0, 101);
    const PulseGrid b = discretize(spec, 0.0, 3.0, 101);
    for (int k = 0; k < a.M; ++k) CHECK(a.xi[k] == b.xi[k]);
    CHECK(a.tail == b.tail);
}

TEST_CASE("invalid inputs") {
    CHECK_THROWS_AS(discretize(ProfileSpec{"flat", {}}, 1.0, 1.0, 4), ValidationError);
    CHECK_THROWS_AS(discretize(ProfileSpec{"flat", {}}, 0.0, 1.0, 1), ValidationError);
    CHECK_THROWS_AS(discretize(ProfileSpec{"nope", {}}, 0.0, 1.0, 4), ValidationError);
    CHECK_THROWS_AS(discretize(ProfileSpec{"rising_exp", {}}, 0.0, 1.0, 4), ValidationError);
    const ProfileFn zero = [](double) { return cplx(0.0); };
    CHECK_THROWS_AS(discretize(zero, 0.0, 1.0, 4), ValidationError);
}

TEST_CASE("registry accepts new profiles") {
    ProfileRegistry::instance().add("half_sine", [](const auto&, double t0, double t1) {
        const double len = t1 - t0;
        return ProfileFn([=](double t) {
            return cplx(std::sqrt(2.0 / len) * std::sin(M_PI * (t - t0) / len));
        });
    });
    CHECK(ProfileRegistry::instance().contains("half_sine"));
    const PulseGrid g = discretize(ProfileSpec{"half_sine", {}}, 0.0, 2.0, 64);
    CHECK(std::abs(g.renormalization - 1.0) < 1e-3);
}

TEST_CASE("grid envelope is piecewise constant with exact tails") {
    const PulseGrid g = discretize(ProfileSpec{"decaying_exp", {{"rate", 1.0}}}, 0.0, 2.0, 8);
    const Envelope env = Envelope::from_grid(g);
    CHECK(env.xi(0.3) == g.xi[1]);
    CHECK(env.xi(0.25) == g.xi[1]);
    CHECK(env.xi_on_piece(0.25, 0.2) == g.xi[0]);
    CHECK(env.xi(2.0) == cplx(0.0));
    CHECK(env.xi(-0.1) == cplx(0.0));
    CHECK(env.tail(0.5) == doctest::Approx(tail_norm(g, 2)).epsilon(1e-14));
    CHECK(env.tail(0.6) == doctest::Approx(tail_norm(g, 3) + 0.15 * std::norm(g.xi[2])));
    CHECK(env.breakpoints_in(0.1, 0.9).size() == 3);
    const auto pieces = env.pieces(0.1, 0.9);
    REQUIRE(pieces.size() == 4);
    CHECK(pieces.front().first == 0.1);
    CHECK(pieces.back().second == 0.9);
}

TEST_CASE("smooth envelope is renormalized on its support") {
    const ProfileSpec spec{"gaussian", {{"center", 2.0}, {"sigma", 1.0}}};
    const Envelope env = Envelope::from_spec(spec, 0.0, 4.0);
    CHECK(env.tail(0.0) == 1.0);
    CHECK(env.tail(2.0) == doctest::Approx(0.5).epsilon(1e-10));
    const double mass =
        integrate_adaptive_real([&](double t) { return std::norm(env.xi(t)); }, 0.0, 4.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(env.breakpoints_in(-1.0, 5.0).size() == 2);
    CHECK(env.pieces(0.5, 3.5).size() == 1);
}
