#include "sqz/collision.hpp"

#include <algorithm>
#include <cmath>

#include "sqz/errors.hpp"

namespace sqz {

namespace {

double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

void require_step_available(const ConditionalVectors& state, const PulseGrid& grid) {
    require(state.j >= 0 && state.j < grid.M, "collision step beyond the end of the pulse grid");
}

ConditionalVectors advanced(const ConditionalVectors& state) {
    ConditionalVectors next;
    next.j = state.j + 1;
    next.logweight = state.logweight;
    next.leakage = state.leakage;
    return next;
}

}  // namespace

void CollisionModel::validate() const {
    system.validate();
    require(ancilla_dim >= 2, "discretization.ancilla_dim must be at least 2");
    require(grid.M >= 2 && grid.tau > 0.0, "collision model needs a pulse grid");
    require(coeffs.a.size() == coeffs.m_cut + 1, "collision model needs a coefficient table");
}

Operator build_step_unitary(const Operator& H, const Operator& L, double tau, int ancilla_dim) {
    require(tau > 0.0, "build_step_unitary: tau must be positive");
    require(ancilla_dim >= 2, "build_step_unitary: ancilla_dim must be at least 2");
    require(H.rows() == H.cols() && L.rows() == H.rows() && L.cols() == H.cols(),
            "build_step_unitary: H and L must be square and of equal size");
    const Operator b = make_annihilation(ancilla_dim);
    const Operator coupling = kron(b.adjoint(), L) - kron(b, L.adjoint());
    // -i tau (1 (x) H) + sqrt(tau) (b^dagger L - b L^dagger)
    const Operator generator =
        -kI * tau * kron(identity(ancilla_dim), H) + std::sqrt(tau) * coupling;
    return matrix_exponential(generator, 1.0);
}

Operator build_step_unitary(const CollisionModel& model) {
    return build_step_unitary(model.system.H, model.system.L, model.tau(), model.ancilla_dim);
}

VBlocks::VBlocks(const Operator& U, int ancilla_dim, Index sys_dim)
    : ancilla_dim_(ancilla_dim), sys_dim_(sys_dim) {
    require(ancilla_dim >= 1 && sys_dim >= 1, "extract_v_blocks: dimensions must be positive");
    require(U.rows() == ancilla_dim * sys_dim && U.cols() == U.rows(),
            "extract_v_blocks: U shape does not match ancilla_dim * sys_dim");
    blocks_.reserve(ancilla_dim * ancilla_dim);
    for (int m = 0; m < ancilla_dim; ++m)
        for (int mp = 0; mp < ancilla_dim; ++mp)
            blocks_.push_back(U.block(m * sys_dim, mp * sys_dim, sys_dim, sys_dim));
}

Operator VBlocks::reassemble() const {
    Operator U(ancilla_dim_ * sys_dim_, ancilla_dim_ * sys_dim_);
    for (int m = 0; m < ancilla_dim_; ++m)
        for (int mp = 0; mp < ancilla_dim_; ++mp)
            U.block(m * sys_dim_, mp * sys_dim_, sys_dim_, sys_dim_) = block(m, mp);
    return U;
}

double VBlocks::unitarity_defect() const {
    double worst = 0.0;
    for (int a = 0; a < ancilla_dim_; ++a)
        for (int b = 0; b < ancilla_dim_; ++b) {
            Operator acc = Operator::Zero(sys_dim_, sys_dim_);
            for (int m = 0; m < ancilla_dim_; ++m) acc += block(m, b).adjoint() * block(m, a);
            if (a == b) acc -= Operator::Identity(sys_dim_, sys_dim_);
            worst = std::max(worst, acc.cwiseAbs().maxCoeff());
        }
    return worst;
}

VBlocks extract_v_blocks(const Operator& U, int ancilla_dim, Index sys_dim) {
    return VBlocks(U, ancilla_dim, sys_dim);
}

FirstOrderBlocks first_order_blocks(const Operator& H, const Operator& L, double tau) {
    const Index d = H.rows();
    const Operator id = Operator::Identity(d, d);
    const double rt = std::sqrt(tau);
    return {id - kI * tau * H - 0.5 * tau * (L.adjoint() * L), -rt * L.adjoint(), rt * L, id};
}

ConditionalVectors initial_vectors(const CoefficientTable& coeffs, const StateVector& psi0) {
    ConditionalVectors state;
    state.psi = psi0 * coeffs.a.transpose();
    return state;
}

double family_weight(const Operator& psi, double u) {
    double total = 0.0;
    double power = 1.0;
    for (Index m = 0; m < psi.cols(); ++m) {
        total += psi.col(m).squaredNorm() * power;
        power *= u;
        if (power == 0.0) break;
    }
    return total;
}

namespace {

// The exact recurrence applied to a bare family; shared by stepping and sampling.
Operator exact_update(const Operator& psi, const VBlocks& blocks, cplx amp, int eta) {
    const int m_cut = static_cast<int>(psi.cols()) - 1;
    Operator out = blocks.block(eta, 0) * psi;
    if (amp == cplx(0.0)) return out;
    cplx amp_power = 1.0;
    const int mp_max = std::min(blocks.ancilla_dim() - 1, m_cut);
    for (int mp = 1; mp <= mp_max; ++mp) {
        amp_power *= amp;
        const Operator shifted = blocks.block(eta, mp) * psi.rightCols(m_cut + 1 - mp);
        for (int m = 0; m + mp <= m_cut; ++m) {
            const double binom = std::exp(0.5 * log_binomial(m + mp, mp));
            out.col(m) += (binom * amp_power) * shifted.col(m);
        }
    }
    return out;
}

}  // namespace

ConditionalVectors step_exact(const ConditionalVectors& state, const VBlocks& blocks,
                              const PulseGrid& grid, int eta) {
    require_step_available(state, grid);
    require(eta >= 0 && eta < blocks.ancilla_dim(), "step_exact: outcome out of range");
    require(state.psi.rows() == blocks.sys_dim(), "step_exact: system dimension mismatch");
    ConditionalVectors next = advanced(state);
    next.psi = exact_update(state.psi, blocks, std::sqrt(grid.tau) * grid.xi[state.j], eta);
    return next;
}

ConditionalVectors step_truncated(const ConditionalVectors& state, const FirstOrderBlocks& blocks,
                                  const PulseGrid& grid, int eta) {
    require_step_available(state, grid);
    require(eta == 0 || eta == 1, "step_truncated: outcome must be 0 or 1");
    const int m_cut = state.m_cut();
    const Operator& v0 = eta == 0 ? blocks.v00 : blocks.v10;
    const Operator& v1 = eta == 0 ? blocks.v01 : blocks.v11;
    const cplx amp = std::sqrt(grid.tau) * grid.xi[state.j];
    ConditionalVectors next = advanced(state);
    next.psi = v0 * state.psi;
    if (amp != cplx(0.0) && m_cut > 0) {
        const Operator shifted = v1 * state.psi.rightCols(m_cut);
        for (int m = 0; m < m_cut; ++m)
            next.psi.col(m) += (std::sqrt(m + 1.0) * amp) * shifted.col(m);
    }
    return next;
}

ConditionalVectors step_truncated(const ConditionalVectors& state, const CollisionModel& model,
                                  int eta) {
    return step_truncated(state, first_order_blocks(model.system.H, model.system.L, model.tau()),
                          model.grid, eta);
}

void renormalize(ConditionalVectors& state, const PulseGrid& grid) {
    const double w = family_weight(state.psi, tail_norm(grid, state.j));
    if (!(w > 1e-300) || !std::isfinite(w))
        throw IntegrityError("dead trajectory: weight " + sci(w) + " at step " +
                             std::to_string(state.j));
    state.psi /= std::sqrt(w);
    state.logweight += std::log(w);
}

namespace {

struct CandidateWeights {
    std::vector<Operator> families;
    std::vector<double> weights;
    double raw = 0.0;
};

CandidateWeights candidate_weights(const ConditionalVectors& state, const VBlocks& blocks,
                                   const PulseGrid& grid) {
    require_step_available(state, grid);
    require(state.psi.rows() == blocks.sys_dim(), "sample_outcome: system dimension mismatch");
    const double current = family_weight(state.psi, tail_norm(grid, state.j));
    if (!(current > 1e-300) || !std::isfinite(current))
        throw IntegrityError("dead trajectory at step " + std::to_string(state.j));
    const double u_next = tail_norm(grid, state.j + 1);
    const cplx amp = std::sqrt(grid.tau) * grid.xi[state.j];
    CandidateWeights out;
    for (int eta = 0; eta < blocks.ancilla_dim(); ++eta) {
        out.families.push_back(exact_update(state.psi, blocks, amp, eta));
        out.weights.push_back(family_weight(out.families.back(), u_next) / current);
        out.raw += out.weights.back();
    }
    if (!(out.raw > 1e-300) || !std::isfinite(out.raw))
        throw IntegrityError("dead trajectory: no outcome has weight at step " +
                             std::to_string(state.j));
    return out;
}

}  // namespace

OutcomeDistribution outcome_distribution(const ConditionalVectors& state, const VBlocks& blocks,
                                         const PulseGrid& grid) {
    const CandidateWeights c = candidate_weights(state, blocks, grid);
    OutcomeDistribution dist;
    for (double w : c.weights) dist.probabilities.push_back(w / c.raw);
    dist.leakage = 1.0 - c.raw;
    return dist;
}

SampledOutcome sample_outcome(const ConditionalVectors& state, const VBlocks& blocks,
                              const PulseGrid& grid, Rng& rng) {
    CandidateWeights c = candidate_weights(state, blocks, grid);
    const double draw = rng.uniform() * c.raw;
    int eta = 0;
    double cumulative = c.weights[0];
    while (draw >= cumulative && eta + 1 < blocks.ancilla_dim()) cumulative += c.weights[++eta];
    SampledOutcome out{eta, c.weights[eta] / c.raw, advanced(state)};
    out.next.psi = std::move(c.families[eta]);
    out.next.leakage += 1.0 - c.raw;
    return out;
}

ReducedState reduce(const ConditionalVectors& state, const PulseGrid& grid) {
    const double u = tail_norm(grid, state.j);
    const Index d = state.psi.rows();
    DensityOperator rho = DensityOperator::Zero(d, d);
    double power = 1.0;
    for (Index m = 0; m < state.psi.cols() && power > 0.0; ++m) {
        rho.noalias() += power * state.psi.col(m) * state.psi.col(m).adjoint();
        power *= u;
    }
    const double tr = rho.trace().real();
    if (!(tr > 0.0)) throw IntegrityError("reduce: zero trace (dead trajectory)");
    return {rho / tr, std::exp(state.logweight) * tr};
}

int checkpoint_step(const PulseGrid& grid, double t) {
    const double x = (t - grid.t0) / grid.tau;
    const double j = std::round(x);
    require(std::abs(x - j) < 1e-9 && j >= 0 && j <= grid.M,
            "checkpoint time " + std::to_string(t) + " is not on the step grid");
    return static_cast<int>(j);
}

namespace {

std::vector<int> checkpoint_steps(const PulseGrid& grid, const std::vector<double>& times) {
    std::vector<int> steps;
    for (double t : times) steps.push_back(checkpoint_step(grid, t));
    return steps;
}

void record_checkpoints(const ConditionalVectors& state, const PulseGrid& grid,
                        const std::vector<int>& steps, const std::vector<double>& times,
                        TrajectoryRecord& out) {
    for (std::size_t k = 0; k < steps.size(); ++k)
        if (steps[k] == state.j) out.checkpoints.push_back({times[k], reduce(state, grid).rho});
}

}  // namespace

TrajectoryRecord run_trajectory(const CollisionModel& model, std::uint64_t seed,
                                const std::vector<double>& checkpoints) {
    model.validate();
    const std::vector<int> steps = checkpoint_steps(model.grid, checkpoints);
    const VBlocks blocks = extract_v_blocks(build_step_unitary(model), model.ancilla_dim,
                                            model.system.dim());
    Rng rng(seed);
    TrajectoryRecord out;
    out.seed = seed;
    ConditionalVectors state = initial_vectors(model.coeffs, model.system.psi0);
    renormalize(state, model.grid);
    record_checkpoints(state, model.grid, steps, checkpoints, out);
    for (int j = 0; j < model.grid.M; ++j) {
        SampledOutcome s = sample_outcome(state, blocks, model.grid, rng);
        state = std::move(s.next);
        renormalize(state, model.grid);
        for (int k = 0; k < s.eta; ++k) out.count_times.push_back(model.grid.time(j + 1));
        record_checkpoints(state, model.grid, steps, checkpoints, out);
    }
    out.logp = state.logweight;
    out.leakage = state.leakage;
    return out;
}

std::vector<int> outcomes_from_counts(const PulseGrid& grid, const std::vector<double>& times) {
    std::vector<int> outcomes(grid.M, 0);
    for (double t : times) {
        // bins are (t_j, t_{j+1}], matching detection at the end of a bin
        const int bin = static_cast<int>(std::ceil((t - grid.t0) / grid.tau - 1e-9)) - 1;
        require(bin >= 0 && bin < grid.M, "count time outside the pulse grid");
        ++outcomes[bin];
    }
    return outcomes;
}

TrajectoryRecord run_record(const CollisionModel& model, const std::vector<int>& outcomes,
                            const std::vector<double>& checkpoints, bool first_order) {
    model.validate();
    require(static_cast<int>(outcomes.size()) == model.grid.M,
            "run_record: one outcome per time bin is required");
    const std::vector<int> steps = checkpoint_steps(model.grid, checkpoints);
    VBlocks blocks;
    FirstOrderBlocks first;
    if (first_order)
        first = first_order_blocks(model.system.H, model.system.L, model.tau());
    else
        blocks = extract_v_blocks(build_step_unitary(model), model.ancilla_dim, model.system.dim());

    TrajectoryRecord out;
    ConditionalVectors state = initial_vectors(model.coeffs, model.system.psi0);
    renormalize(state, model.grid);
    record_checkpoints(state, model.grid, steps, checkpoints, out);
    for (int j = 0; j < model.grid.M; ++j) {
        const int eta = outcomes[j];
        state = first_order ? step_truncated(state, first, model.grid, eta)
                            : step_exact(state, blocks, model.grid, eta);
        renormalize(state, model.grid);
        for (int k = 0; k < eta; ++k) out.count_times.push_back(model.grid.time(j + 1));
        record_checkpoints(state, model.grid, steps, checkpoints, out);
    }
    out.logp = state.logweight;
    return out;
}

}  // namespace sqz
