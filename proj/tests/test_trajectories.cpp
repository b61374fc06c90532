#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "common/oracles.hpp"
#include "sqz/collision.hpp"
#include "sqz/errors.hpp"
#include "sqz/quadrature.hpp"
#include "sqz/sme.hpp"
#include "sqz/trajectories.hpp"

using namespace sqz;

namespace {

Envelope gaussian_env(double t1, double center, double sigma) {
    return Envelope::from_spec(ProfileSpec{"gaussian", {{"center", center}, {"sigma", sigma}}}, 0.0, t1);
}

TrajectoryModel make_model(const OpenSystem& sys, const Envelope& env, int n, SqueezeParams sq,
                           double max_dt = 0.005) {
    TrajectoryModel model;
    model.system = sys;
    model.env = env;
    model.coeffs = squeeze_coefficients(n, sq);
    model.max_dt = max_dt;
    return model;
}

// Forward-only nested integrals: O_j(a, b) v is the sum over j absorptions
// a < s_1 < ... < s_j < b of T_{b-s_j} (-xi L^dag) ... (-xi L^dag) T_{s_1-a} v.
// This is T_b A_{s_j} ... A_{s_1} T_{-a} with the inverse propagators cancelled.
struct NestedOracle {
    const TrajectoryModel& model;
    Propagators T;
    int order;

    NestedOracle(const TrajectoryModel& m, int q) : model(m), T(m.system, 1.0), order(q) {}

    StateVector absorb(double s, const StateVector& v) const {
        return -model.env.xi(s) * (model.system.L.adjoint() * v);
    }

    StateVector ordered(int j, double a, double b, const StateVector& v) const {
        if (j == 0) return T.of(b - a) * v;
        StateVector out = StateVector::Zero(v.size());
        if (b <= a) return out;
        const MappedRule rule = map_rule(gauss_legendre(order), a, b);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double s = rule.nodes[i];
            out += rule.weights[i] * (T.of(b - s) * absorb(s, ordered(j - 1, a, s, v)));
        }
        return out;
    }
};

struct Term {
    int nA = 0, nE = 0, nD = 0;
};

// R(k) psi0 for one count at t1, summed over terms with i absorptions before t1,
// j after, and either an emission or a direct detection at t1.
StateVector one_count_operator(const NestedOracle& oracle, int k, double t1, double t,
                               const StateVector& psi0, int& term_count) {
    const TrajectoryModel& model = oracle.model;
    const double t0 = model.t0();
    StateVector out = StateVector::Zero(psi0.size());
    for (int direct = 0; direct <= 1; ++direct) {
        for (int i = 0; i + direct <= k; ++i) {
            const int j = k - direct - i;
            Term term{i + j, 1 - direct, direct};
            CHECK(term.nE + term.nD == 1);
            CHECK(term.nA + term.nD == k);
            StateVector v = oracle.ordered(i, t0, t1, psi0);
            v = direct ? StateVector(model.env.xi(t1) * v) : StateVector(model.system.L * v);
            out += oracle.ordered(j, t1, t, v);
            ++term_count;
        }
    }
    return out;
}

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

TEST_CASE("propagators compose and contract") {
    const OpenSystem sys = cavity(4, 0.7, 0.3, 2);
    Propagators T(sys, 0.05);
    CHECK((T.at(0) - identity(4)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((T.at(7) - T.at(3) * T.at(4)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((T.at(10) - T.of(0.5)).cwiseAbs().maxCoeff() < 1e-10);
    StateVector v = StateVector::Random(4);
    double last = v.norm();
    for (int k = 1; k <= 40; ++k) {
        const double now = (T.at(k) * v).norm();
        CHECK(now <= last + 1e-14);
        last = now;
    }
    CHECK_THROWS_AS(T.of(-0.1), ValidationError);
}

TEST_CASE("no-count family special cases") {
    SUBCASE("no pulse: free propagation of every member") {
        const auto model = make_model(two_level(1.0, 0.4, true), Envelope::zero(0.0, 3.0), 1,
                                      SqueezeParams{0.3, 0.2});
        const ContinuousFamily f = no_count_vectors(model, 1.7);
        const StateVector Tpsi = Propagators(model.system, 1.0).of(1.7) * model.system.psi0;
        for (int m = 0; m <= model.coeffs.m_cut; ++m)
            CHECK((f.psi.col(m) - model.coeffs.a(m) * Tpsi).norm() < 1e-10);
    }
    SUBCASE("vacuum input, ground state: nothing happens") {
        const auto model = make_model(two_level(1.0, 0.0, false), gaussian_env(4.0, 2.0, 0.5), 0,
                                      SqueezeParams{0.0, 0.0});
        const ContinuousFamily f = no_count_vectors(model, 3.0);
        CHECK((f.psi - initial_family(model).psi).norm() < 1e-14);
        CHECK(exclusive_density(model, {}, 3.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("single photon no-count vectors match the nested-integral oracle") {
    const Envelope env = Envelope::from_spec(ProfileSpec{"flat", {}}, 0.0, 2.0);
    const auto model = make_model(two_level(1.0, 0.0, false), env, 1, SqueezeParams{0.0, 0.0}, 1e-3);
    const NestedOracle oracle(model, 40);
    const double t = 0.3;
    const ContinuousFamily f = no_count_vectors(model, t);
    const StateVector psi0 = model.system.psi0;
    // a_1 = 1: psi(0) = T_t int A psi0 and psi(1) = T_t psi0; k >= 2 vanishes (L^dag^2 = 0).
    CHECK((f.psi.col(0) - oracle.ordered(1, 0.0, t, psi0)).norm() < 1e-8);
    CHECK((f.psi.col(1) - oracle.ordered(0, 0.0, t, psi0)).norm() < 1e-12);
    CHECK(oracle.ordered(2, 0.0, t, psi0).norm() < 1e-15);
}

TEST_CASE("no-count family matches nested integrals with up to three absorptions") {
    const OpenSystem sys = cavity(5, 0.8, 0.3, 0);
    const auto model = make_model(sys, gaussian_env(2.0, 0.8, 0.4), 3, SqueezeParams{0.0, 0.0}, 1e-3);
    const NestedOracle oracle(model, 16);
    const double t = 0.9;
    const ContinuousFamily f = no_count_vectors(model, t);
    // a_3 = 1: psi(m) = sqrt(3!/m!) T_t int..int A...A psi0 with 3 - m absorptions.
    for (int m = 0; m <= 3; ++m) {
        const StateVector expect =
            std::sqrt(factorial(3) / factorial(m)) * oracle.ordered(3 - m, 0.0, t, sys.psi0);
        CHECK((f.psi.col(m) - expect).norm() < 1e-7);
    }
}

TEST_CASE("one count composes into the R-operator terms") {
    const OpenSystem sys = cavity(4, 0.9, 0.3, 0);
    const auto model = make_model(sys, gaussian_env(2.0, 1.0, 0.4), 2, SqueezeParams{0.0, 0.0}, 1e-3);
    const NestedOracle oracle(model, 24);
    const double t1 = 0.7, t = 1.5;
    const ContinuousFamily f = record_family(model, {t1}, t);
    int terms = 0;
    for (int m = 0; m <= 2; ++m) {
        const int k = 2 - m;
        const StateVector expect = std::sqrt(factorial(2) / factorial(m)) *
                                   one_count_operator(oracle, k, t1, t, sys.psi0, terms);
        CHECK((f.psi.col(m) - expect).norm() < 1e-8);
    }
    // k = 0: E; k = 1: AE, EA, D; k = 2: AAE, AEA, EAA, AD, DA.
    CHECK(terms == 1 + 3 + 5);
    for (int m = 3; m <= model.coeffs.m_cut; ++m) CHECK(f.psi.col(m).norm() < 1e-14);
}

TEST_CASE("count map special cases") {
    SUBCASE("zero amplitude leaves only the emission") {
        const auto model = make_model(two_level(1.0, 0.0, true), gaussian_env(4.0, 2.0, 0.5), 1,
                                      SqueezeParams{0.4, 0.0});
        ContinuousFamily f = initial_family(model);
        f.t = 5.0;  // past the support
        const ContinuousFamily g = apply_count(model, f);
        CHECK((g.psi - model.system.L * f.psi).norm() < 1e-15);
    }
    SUBCASE("ground-state atom before any overlap: direct detection only") {
        const Envelope env = Envelope::from_spec(ProfileSpec{"flat", {}}, 0.0, 2.0);
        const auto model = make_model(two_level(1.0, 0.0, false), env, 1, SqueezeParams{0.0, 0.0});
        const ContinuousFamily g = apply_count(model, initial_family(model));
        CHECK((g.psi.col(0) - env.xi(0.0) * model.system.psi0).norm() < 1e-15);
        CHECK(g.psi.col(1).norm() < 1e-15);
    }
    SUBCASE("two-level atom: two successive absorptions vanish") {
        const Operator Ld = two_level(1.0, 0.0, false).L.adjoint();
        CHECK((Ld * Ld).norm() == 0.0);
    }
}

TEST_CASE("exclusive densities of a decaying atom") {
    const double gamma = 1.3, t = 2.0;
    const auto model = make_model(two_level(gamma, 0.0, true), Envelope::zero(0.0, 5.0), 0,
                                  SqueezeParams{0.0, 0.0}, 1e-3);
    CHECK(exclusive_density(model, {}, t) == doctest::Approx(std::exp(-gamma * t)).epsilon(1e-10));
    for (double t1 : {0.1, 0.8, 1.9})
        CHECK(exclusive_density(model, {t1}, t) ==
              doctest::Approx(gamma * std::exp(-gamma * t1)).epsilon(1e-10));
    CHECK(exclusive_density(model, {0.5, 1.0}, t) < 1e-30);
    CHECK_THROWS_AS(exclusive_density(model, {1.0, 0.5}, t), ValidationError);
    CHECK_THROWS_AS(exclusive_density(model, {2.5}, t), ValidationError);

    const CountDistribution P = count_distribution(model, t, 2);
    CHECK(P.P[0] == doctest::Approx(std::exp(-gamma * t)).epsilon(1e-10));
    CHECK(P.P[1] == doctest::Approx(1.0 - std::exp(-gamma * t)).epsilon(1e-10));
    CHECK(std::abs(P.P[2]) < 1e-20);
    CHECK(std::abs(P.deficit) < 1e-10);

    const AprioriDecomposition dec = apriori_decomposition(model, t, 1);
    DensityOperator exact = DensityOperator::Zero(2, 2);
    exact(0, 0) = 1.0 - std::exp(-gamma * t);
    exact(1, 1) = std::exp(-gamma * t);
    CHECK(trace_norm(dec.sigma - exact) < 1e-10);
}

TEST_CASE("no coupling: the detector sees the input photons directly") {
    OpenSystem sys = two_level(1.0, 0.5, false);
    sys.psi0 = StateVector::Ones(2) / std::sqrt(2.0);
    sys.L = Operator::Zero(2, 2);
    const Envelope env = gaussian_env(6.0, 3.0, 0.7);
    SUBCASE("vacuum") {
        const auto model = make_model(sys, env, 0, SqueezeParams{0.0, 0.0});
        CHECK(exclusive_density(model, {}, 6.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(exclusive_density(model, {2.0}, 6.0) == 0.0);
        const CountDistribution P = count_distribution(model, 6.0, 2);
        CHECK(P.P[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(P.P[1] == 0.0);
    }
    SUBCASE("squeezed single photon") {
        TrajectoryModel model = make_model(sys, env, 1, SqueezeParams{0.4, 0.3});
        model.order_high = 10;
        const AprioriDecomposition dec = apriori_decomposition(model, 6.0, 4);
        const StateVector Tpsi = Propagators(sys, 1.0).of(6.0) * sys.psi0;
        CHECK(trace_norm(dec.sigma - (1.0 - dec.counts.deficit) * projector(Tpsi)) < 1e-8);
        // Ten points per dimension limit the s >= 3 sectors to about 1e-4.
        for (int s = 0; s <= 4; ++s)
            CHECK(dec.counts.P[s] ==
                  doctest::Approx(std::norm(model.coeffs[s])).epsilon(s <= 2 ? 1e-7 : 1e-3));
    }
}

TEST_CASE("single photon completeness and eventual re-emission") {
    const Envelope env = Envelope::from_spec(ProfileSpec{"flat", {}}, 0.0, 2.0);
    const auto model = make_model(two_level(1.0, 0.0, false), env, 1, SqueezeParams{0.0, 0.0}, 2e-3);
    const CountDistribution at_end = count_distribution(model, 2.0, 3);
    double sum = 0.0;
    for (double p : at_end.P) sum += p;
    CHECK(std::abs(sum - 1.0) < 1e-6);
    CHECK(std::abs(at_end.deficit) < 1e-6);
    CHECK(at_end.P[2] < 1e-12);

    const CountDistribution late = count_distribution(model, 14.0, 1);
    CHECK(late.P[1] > 1.0 - 1e-4);
}

TEST_CASE("completeness deficit shrinks with more count sectors") {
    TrajectoryModel model = make_model(two_level(1.0, 0.0, false), gaussian_env(8.0, 4.0, 1.0), 0,
                                       SqueezeParams{0.5, 0.0}, 0.01);
    model.order_low = 16;
    model.order_high = 10;
    double last = 1.0;
    for (int s_max = 0; s_max <= 3; ++s_max) {
        const CountDistribution P = count_distribution(model, 8.0, s_max);
        CHECK(P.deficit >= -1e-9);
        CHECK(P.deficit <= last + 1e-12);
        last = P.deficit;
    }
}

TEST_CASE("count statistics agree with the collision histogram") {
    const double T = 8.0;
    const SqueezeParams sq{0.5, 0.0};
    const auto model = make_model(two_level(1.0, 0.0, false), gaussian_env(T, 4.0, 1.0), 0, sq, 0.01);
    const CountDistribution P = count_distribution(model, T, 3);

    CollisionModel coll;
    coll.system = model.system;
    coll.grid = discretize(ProfileSpec{"gaussian", {{"center", 4.0}, {"sigma", 1.0}}}, 0.0, T, 200);
    coll.coeffs = model.coeffs;
    coll.ancilla_dim = 3;
    const int trajectories = 10000;
    std::vector<int> histogram(5, 0);
    for (int i = 0; i < trajectories; ++i) {
        const TrajectoryRecord rec = run_trajectory(coll, derive_seed(2024, i), {});
        ++histogram[std::min<std::size_t>(rec.count_times.size(), 4)];
    }
    for (int s = 0; s <= 3; ++s) {
        const double freq = static_cast<double>(histogram[s]) / trajectories;
        const double se = std::sqrt(std::max(P.P[s] * (1.0 - P.P[s]), 1e-12) / trajectories);
        INFO("s = " << s << " analytic " << P.P[s] << " empirical " << freq);
        CHECK(std::abs(freq - P.P[s]) <= 3.0 * se);
    }
}

TEST_CASE("decomposition reproduces the master route") {
    const double T = 8.0;
    const OpenSystem sys = two_level(1.0, 0.0, false);
    const SqueezeParams sq{0.3, 0.0};
    const Envelope env = gaussian_env(T, 4.0, 1.0);
    const auto model = make_model(sys, env, 1, sq, 0.01);
    const HierarchyModel master = squeezed_hierarchy(sys, 1, sq);
    const auto cp = master_checkpoints(master, env, {3.0, T / 2}, 0.005, Stepper::rk4);
    for (const auto& c : cp) {
        const AprioriDecomposition dec = apriori_decomposition(model, c.t, 3);
        const DensityOperator missing = physical_state(master, c.state) - dec.sigma;
        INFO("t = " << c.t << " deficit " << dec.counts.deficit);
        // The omitted sectors s >= 4 form a positive operator of trace = deficit.
        CHECK(std::abs(trace_norm(missing) - dec.counts.deficit) < 1e-5);
        CHECK(Eigen::SelfAdjointEigenSolver<Operator>(missing).eigenvalues().minCoeff() > -1e-5);
        if (dec.counts.deficit < 1e-5) CHECK(trace_norm(missing) < 1e-4);
    }
}
