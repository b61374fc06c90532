#include "sqz/trajectories.hpp"

#include <algorithm>
#include <cmath>

#include "sqz/ensemble.hpp"
#include "sqz/errors.hpp"
#include "sqz/quadrature.hpp"

namespace sqz {

namespace {

Operator non_hermitian_generator(const OpenSystem& system) {
    return system.H - 0.5 * kI * system.L.adjoint() * system.L;
}

}  // namespace

Propagators::Propagators(const OpenSystem& system, double step)
    : G_(non_hermitian_generator(system)), step_(step) {
    require(step > 0.0, "Propagators: step must be positive");
    cache_.push_back(identity(G_.rows()));
    cache_.push_back(matrix_exponential(G_, -kI * step));
}

const Operator& Propagators::at(int k) {
    require(k >= 0, "Propagators: negative time index");
    while (static_cast<int>(cache_.size()) <= k) cache_.push_back(cache_[1] * cache_.back());
    return cache_[k];
}

Operator Propagators::of(double t) const {
    require(t >= 0.0, "Propagators: T_t is only formed for t >= 0");
    return matrix_exponential(G_, -kI * t);
}

void TrajectoryModel::validate() const {
    system.validate();
    require(max_dt > 0.0, "trajectories: max_dt must be positive");
    require(order_low >= 1 && order_high >= 1, "trajectories: quadrature orders must be positive");
    require(threads >= 1, "trajectories: threads must be positive");
    require(coeffs.a.size() == coeffs.m_cut + 1, "trajectories: malformed coefficient table");
}

namespace {

// Precomputed pieces of the family ODE.
struct FamilyOps {
    Operator minus_iG;
    Operator Ldag;
    Eigen::ArrayXd up;  // sqrt(m+1), m = 0..m_cut-1

    explicit FamilyOps(const TrajectoryModel& model)
        : minus_iG(-kI * non_hermitian_generator(model.system)),
          Ldag(model.system.L.adjoint()),
          up(Eigen::ArrayXd::LinSpaced(model.coeffs.m_cut, 1.0, model.coeffs.m_cut).sqrt()) {}

    Operator rhs(const Operator& psi, cplx xi) const {
        Operator out = minus_iG * psi;
        const Index m = psi.cols() - 1;
        if (m > 0 && xi != 0.0) {
            Operator shifted = psi.rightCols(m) * up.matrix().asDiagonal();
            out.leftCols(m).noalias() -= xi * (Ldag * shifted);
        }
        return out;
    }
};

void rk4_segment(const TrajectoryModel& model, const FamilyOps& ops, Operator& psi, double a,
                 double b) {
    const int steps = std::max(1, static_cast<int>(std::ceil((b - a) / model.max_dt - 1e-9)));
    const double h = (b - a) / steps;
    const double mid = 0.5 * (a + b);
    for (int i = 0; i < steps; ++i) {
        const double t = a + i * h;
        const cplx x0 = model.env.xi_on_piece(t, mid);
        const cplx xh = model.env.xi_on_piece(t + 0.5 * h, mid);
        const cplx x1 = model.env.xi_on_piece(t + h, mid);
        const Operator k1 = ops.rhs(psi, x0);
        const Operator k2 = ops.rhs(psi + 0.5 * h * k1, xh);
        const Operator k3 = ops.rhs(psi + 0.5 * h * k2, xh);
        const Operator k4 = ops.rhs(psi + h * k3, x1);
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
}

void propagate_in_place(const TrajectoryModel& model, const FamilyOps& ops,
                        ContinuousFamily& family, double t1) {
    require(t1 >= family.t - 1e-12, "propagate: target time precedes the family time");
    for (const auto& [a, b] : model.env.pieces(family.t, t1)) rk4_segment(model, ops, family.psi, a, b);
    family.t = std::max(family.t, t1);
}

void count_in_place(const TrajectoryModel& model, ContinuousFamily& family) {
    const cplx xi = model.env.xi(family.t);
    const Index m = family.psi.cols() - 1;
    Operator out = model.system.L * family.psi;
    if (m > 0 && xi != 0.0) {
        const Eigen::ArrayXd up = Eigen::ArrayXd::LinSpaced(m, 1.0, static_cast<double>(m)).sqrt();
        out.leftCols(m) += xi * (family.psi.rightCols(m) * up.matrix().asDiagonal());
    }
    family.psi = std::move(out);
}

void require_times(const TrajectoryModel& model, const std::vector<double>& times, double t) {
    require(t >= model.t0(), "trajectories: time precedes the envelope start");
    require(std::is_sorted(times.begin(), times.end()), "trajectories: count times must be ascending");
    for (double s : times)
        require(s >= model.t0() && s <= t, "trajectories: count time " + sci(s) + " outside [t0, t]");
}

double weighted_norm(const Operator& psi, double u) {
    double total = 0.0;
    double power = 1.0;
    for (Index m = 0; m < psi.cols() && power != 0.0; ++m, power *= u) total += power * psi.col(m).squaredNorm();
    return total;
}

DensityOperator weighted_state(const Operator& psi, double u) {
    DensityOperator rho = DensityOperator::Zero(psi.rows(), psi.rows());
    double power = 1.0;
    for (Index m = 0; m < psi.cols() && power != 0.0; ++m, power *= u)
        rho.noalias() += power * psi.col(m) * psi.col(m).adjoint();
    return rho;
}

// Accumulates the s-count sector at time t by nested Gauss-Legendre over
// t0 <= t_1 <= ... <= t_s <= t. Each level sweeps its nodes in ascending order,
// so every family is propagated forward only.
class SectorIntegrator {
public:
    SectorIntegrator(const TrajectoryModel& model, double t, bool with_states)
        : model_(model), ops_(model), t_(t), u_(model.env.tail(t)), with_states_(with_states) {}

    struct Sum {
        double p = 0.0;
        DensityOperator rho;
    };

    Sum sector(int s) const {
        ContinuousFamily start = initial_family(model_);
        if (s == 0) return leaf(std::move(start), 1.0);
        const GaussLegendreRule rule = gauss_legendre(model_.order_for(s));
        const std::vector<Sum> parts = outer_parts(start, rule, s);
        Sum total = zero();
        for (const Sum& part : parts) add(total, part);
        return total;
    }

private:
    // The densities jump where the pulse switches on or off, so smooth envelopes
    // get the rule on each piece between breakpoints. Piecewise-constant grids
    // are integrated across their bins (first-order accurate in the bin width).
    MappedRule rule_on(const GaussLegendreRule& base, double a) const {
        if (model_.env.piecewise_constant()) return map_rule(base, a, t_);
        MappedRule out;
        for (const auto& [lo, hi] : model_.env.pieces(a, t_)) {
            const MappedRule part = map_rule(base, lo, hi);
            out.nodes.insert(out.nodes.end(), part.nodes.begin(), part.nodes.end());
            out.weights.insert(out.weights.end(), part.weights.begin(), part.weights.end());
        }
        return out;
    }

    Sum zero() const {
        Sum z;
        if (with_states_) z.rho = DensityOperator::Zero(model_.system.dim(), model_.system.dim());
        return z;
    }

    void add(Sum& into, const Sum& part) const {
        into.p += part.p;
        if (with_states_) into.rho += part.rho;
    }

    Sum leaf(ContinuousFamily family, double weight) const {
        propagate_in_place(model_, ops_, family, t_);
        Sum out;
        out.p = weight * weighted_norm(family.psi, u_);
        if (with_states_) out.rho = weight * weighted_state(family.psi, u_);
        return out;
    }

    // The outermost level is split by node so it can run in parallel; each node
    // repeats the prefix propagation from t0, which keeps the result independent
    // of the thread count.
    std::vector<Sum> outer_parts(const ContinuousFamily& start, const GaussLegendreRule& base,
                                 int s) const {
        const MappedRule rule = rule_on(base, start.t);
        std::vector<Sum> parts(rule.nodes.size());
        parallel_for(rule.nodes.size(), model_.threads, [&](std::size_t i) {
            ContinuousFamily f = start;
            propagate_in_place(model_, ops_, f, rule.nodes[i]);
            count_in_place(model_, f);
            parts[i] = inner(std::move(f), base, rule.weights[i], s - 1);
        });
        return parts;
    }

    Sum inner(ContinuousFamily family, const GaussLegendreRule& base, double weight,
              int remaining) const {
        if (remaining == 0) return leaf(std::move(family), weight);
        const MappedRule rule = rule_on(base, family.t);
        Sum total = zero();
        ContinuousFamily sweep = std::move(family);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            propagate_in_place(model_, ops_, sweep, rule.nodes[i]);
            ContinuousFamily next = sweep;
            count_in_place(model_, next);
            add(total, inner(std::move(next), base, weight * rule.weights[i], remaining - 1));
        }
        return total;
    }

    const TrajectoryModel& model_;
    FamilyOps ops_;
    double t_;
    double u_;
    bool with_states_;
};

AprioriDecomposition decompose(const TrajectoryModel& model, double t, int s_max, bool with_states) {
    model.validate();
    require(s_max >= 0 && s_max <= 4, "trajectories: s_max must lie in 0..4");
    require(t >= model.t0(), "trajectories: time precedes the envelope start");
    SectorIntegrator integrator(model, t, with_states);
    AprioriDecomposition out;
    out.t = t;
    out.counts.t = t;
    const Index d = model.system.dim();
    if (with_states) out.sigma = DensityOperator::Zero(d, d);
    double total = 0.0;
    for (int s = 0; s <= s_max; ++s) {
        auto sum = integrator.sector(s);
        out.counts.P.push_back(sum.p);
        total += sum.p;
        if (with_states) {
            out.sigma += sum.rho;
            out.sectors.push_back(std::move(sum.rho));
        }
    }
    out.counts.deficit = 1.0 - total;
    return out;
}

}  // namespace

ContinuousFamily initial_family(const TrajectoryModel& model) {
    ContinuousFamily family;
    family.psi = model.system.psi0 * model.coeffs.a.transpose();
    family.t = model.t0();
    return family;
}

ContinuousFamily propagate(const TrajectoryModel& model, ContinuousFamily family, double t1) {
    const FamilyOps ops(model);
    propagate_in_place(model, ops, family, t1);
    return family;
}

ContinuousFamily no_count_vectors(const TrajectoryModel& model, double t) {
    require(t >= model.t0(), "no_count_vectors: time precedes the envelope start");
    return propagate(model, initial_family(model), t);
}

ContinuousFamily apply_count(const TrajectoryModel& model, const ContinuousFamily& family) {
    ContinuousFamily out = family;
    count_in_place(model, out);
    return out;
}

double family_density(const TrajectoryModel& model, const ContinuousFamily& family) {
    return weighted_norm(family.psi, model.env.tail(family.t));
}

DensityOperator family_state(const TrajectoryModel& model, const ContinuousFamily& family) {
    return weighted_state(family.psi, model.env.tail(family.t));
}

ContinuousFamily record_family(const TrajectoryModel& model, const std::vector<double>& times,
                               double t) {
    model.validate();
    require_times(model, times, t);
    const FamilyOps ops(model);
    ContinuousFamily family = initial_family(model);
    for (double s : times) {
        propagate_in_place(model, ops, family, s);
        count_in_place(model, family);
    }
    propagate_in_place(model, ops, family, t);
    return family;
}

double exclusive_density(const TrajectoryModel& model, const std::vector<double>& times, double t) {
    return family_density(model, record_family(model, times, t));
}

CountDistribution count_distribution(const TrajectoryModel& model, double t, int s_max) {
    return decompose(model, t, s_max, false).counts;
}

AprioriDecomposition apriori_decomposition(const TrajectoryModel& model, double t, int s_max) {
    return decompose(model, t, s_max, true);
}

}  // namespace sqz
