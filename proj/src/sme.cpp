#include "sqz/sme.hpp"

#include <algorithm>
#include <cmath>

#include "sqz/errors.hpp"

namespace sqz {

namespace {

enum class Map { rhs, no_count, jump };

// Applies one of the hierarchy maps block by block (rhs: master generator,
// no_count: linear no-count generator, jump: C R C^dagger). Each map sends a
// conjugate-symmetric hierarchy to a conjugate-symmetric one, so only blocks
// with a <= b are evaluated and the rest mirrored. D fixes the system
// dimension at compile time when it is small.
template <int D>
Operator fused_map(Map map, const Operator& S, const OpenSystem& sys, const Operator& R, cplx xi) {
    using Blk = Eigen::Matrix<cplx, D, D>;
    const Index d = sys.dim();
    const Index levels = S.rows();
    const Blk L = sys.L;
    const Blk Ld = L.adjoint();
    const Blk G = sys.H - 0.5 * kI * (sys.L.adjoint() * sys.L);
    const Blk Gd = G.adjoint();
    const bool driven = xi != cplx(0.0);
    const cplx xc = std::conj(xi);
    const double x2 = std::norm(xi);
    // down[a] = S(a, a-1), up[a] = S(a, a+1)
    std::vector<cplx> down(levels, 0.0), up(levels, 0.0);
    for (Index a = 0; a < levels; ++a) {
        if (a > 0) down[a] = S(a, a - 1);
        if (a + 1 < levels) up[a] = S(a, a + 1);
    }
    auto r = [&](Index a, Index b) -> Blk { return R.template block<D, D>(a * d, b * d, d, d); };
    // (S R)^{a,b}
    auto x_at = [&](Index a, Index b) -> Blk {
        Blk x = Blk::Zero(d, d);
        if (a > 0) x += down[a] * r(a - 1, b);
        if (a + 1 < levels) x += up[a] * r(a + 1, b);
        return x;
    };
    // (R S^dagger)^{a,b}
    auto y_at = [&](Index a, Index b) -> Blk {
        Blk y = Blk::Zero(d, d);
        if (b > 0) y += std::conj(down[b]) * r(a, b - 1);
        if (b + 1 < levels) y += std::conj(up[b]) * r(a, b + 1);
        return y;
    };
    // (S R S^dagger)^{a,b}
    auto z_at = [&](Index a, Index b) -> Blk {
        Blk z = Blk::Zero(d, d);
        if (a > 0) z += down[a] * y_at(a - 1, b);
        if (a + 1 < levels) z += up[a] * y_at(a + 1, b);
        return z;
    };
    Operator out(R.rows(), R.cols());
    for (Index b = 0; b < levels; ++b)
        for (Index a = 0; a <= b; ++a) {
            const Blk rr = r(a, b);
            Blk o;
            switch (map) {
                case Map::rhs:
                    o = -kI * (G * rr - rr * Gd) + L * rr * Ld;
                    if (driven) {
                        const Blk x = x_at(a, b), y = y_at(a, b);
                        o += xi * (x * Ld - Ld * x) + xc * (L * y - y * L);
                    }
                    break;
                case Map::no_count:
                    o = -kI * (G * rr - rr * Gd);
                    if (driven) o -= xi * (Ld * x_at(a, b)) + xc * (y_at(a, b) * L) + x2 * z_at(a, b);
                    break;
                case Map::jump:
                    o = L * rr * Ld;
                    if (driven) o += xi * (x_at(a, b) * Ld) + xc * (L * y_at(a, b)) + x2 * z_at(a, b);
                    break;
            }
            out.template block<D, D>(a * d, b * d, d, d) = o;
            if (a != b) out.template block<D, D>(b * d, a * d, d, d) = o.adjoint();
        }
    return out;
}

Operator apply_map(Map map, const HierarchyModel& model, const Operator& R, cplx xi) {
    const Operator S = model.coupling();
    if (model.sys_dim() == 2) return fused_map<2>(map, S, model.system, R, xi);
    return fused_map<Eigen::Dynamic>(map, S, model.system, R, xi);
}

void require_state(const HierarchyModel& model, const HierarchyState& state) {
    require(state.R.rows() == model.size() && state.R.cols() == model.size() &&
                state.sys_dim == model.sys_dim() && state.n_cut == model.n_cut,
            "hierarchy state does not match the model");
}

HierarchyState with_matrix(const HierarchyState& like, Operator R) {
    HierarchyState out = like;
    out.R = std::move(R);
    return out;
}

}  // namespace

Operator HierarchyModel::coupling() const {
    const Index levels = n_cut + 1;
    Operator S = Operator::Zero(levels, levels);
    const double c = number_basis ? 1.0 : squeeze.c();
    const cplx se = number_basis ? cplx(0.0) : squeeze.s() * squeeze.phase();
    for (Index a = 0; a < levels; ++a) {
        if (a > 0) S(a, a - 1) = std::sqrt(static_cast<double>(a)) * c;
        if (a + 1 < levels) S(a, a + 1) = -std::sqrt(a + 1.0) * se;
    }
    return S;
}

void HierarchyModel::validate() const {
    system.validate();
    require(n >= 0, "input.n must be non-negative");
    require(n_cut >= 0, "discretization.n_cut must be non-negative");
    require(number_basis || n_cut >= n, "discretization.n_cut must be at least input.n");
    require(squeeze.r >= 0.0, "input.r must be non-negative");
}

HierarchyModel squeezed_hierarchy(const OpenSystem& system, int n, const SqueezeParams& squeeze,
                                  int n_cut) {
    HierarchyModel model{system, squeeze, n, n_cut < 0 ? n + 10 : n_cut, false};
    model.validate();
    return model;
}

HierarchyModel number_hierarchy(const OpenSystem& system, int m_cut) {
    HierarchyModel model{system, SqueezeParams{}, 0, m_cut, true};
    model.validate();
    return model;
}

double HierarchyState::symmetry_defect() const {
    if (R.size() == 0) return 0.0;
    return (R - R.adjoint()).cwiseAbs().maxCoeff();
}

HierarchyState initial_hierarchy(const HierarchyModel& model, HierarchyKind kind, double t0) {
    model.validate();
    require(model.number_basis == (kind == HierarchyKind::number_basis),
            "hierarchy kind does not match the model basis");
    HierarchyState state;
    state.n_cut = model.n_cut;
    state.sys_dim = model.sys_dim();
    state.kind = kind;
    state.t = t0;
    state.R = Operator::Zero(model.size(), model.size());
    const DensityOperator rho0 = projector(model.system.psi0);
    for (int a = 0; a <= model.n_cut; ++a) state.block(a, a) = rho0;
    return state;
}

Operator lindblad(const Operator& H, const Operator& L, const Operator& rho) {
    const Operator LdL = L.adjoint() * L;
    return -kI * (H * rho - rho * H) - 0.5 * (LdL * rho + rho * LdL) + L * rho * L.adjoint();
}

Operator master_rhs(const HierarchyModel& model, const Operator& R, cplx xi) {
    require(R.rows() == model.size() && R.cols() == model.size(), "master_rhs: hierarchy size mismatch");
    return apply_map(Map::rhs, model, R, xi);
}

Operator jump_numerator(const HierarchyModel& model, const Operator& R, cplx xi) {
    require(R.rows() == model.size() && R.cols() == model.size(), "jump_numerator: hierarchy size mismatch");
    return apply_map(Map::jump, model, R, xi);
}

double intensity(const HierarchyModel& model, const HierarchyState& state, cplx xi) {
    require_state(model, state);
    require(!model.number_basis, "intensity is defined for the squeezed-basis filter");
    const Index d = model.sys_dim();
    const int n = model.n;
    const Operator& L = model.system.L;
    const Operator S = model.coupling();
    const int lo = std::max(0, n - 1);
    const int hi = std::min(model.n_cut, n + 1);
    // (C rho)^{n,b} = L rho^{n,b} + xi sum_k S_{nk} rho^{k,b} for the neighbours b of n
    Operator cr_row = Operator::Zero(d, (hi - lo + 1) * d);
    for (int b = lo; b <= hi; ++b) {
        Operator block = L * state.block(n, b);
        for (int k = lo; k <= hi; ++k)
            if (k != n && S(n, k) != cplx(0.0)) block += xi * S(n, k) * state.block(k, b);
        cr_row.middleCols((b - lo) * d, d) = block;
    }
    // (C rho C^dagger)^{n,n} = (C rho)^{n,n} L^dagger + xi* sum_b conj(S_{nb}) (C rho)^{n,b}
    Operator jn = cr_row.middleCols((n - lo) * d, d) * L.adjoint();
    for (int b = lo; b <= hi; ++b)
        if (b != n && S(n, b) != cplx(0.0))
            jn += std::conj(xi) * std::conj(S(n, b)) * cr_row.middleCols((b - lo) * d, d);
    const cplx k = jn.trace();
    if (!std::isfinite(k.real()) || !std::isfinite(k.imag()))
        throw IntegrityError("intensity is not finite at t = " + std::to_string(state.t));
    if (std::abs(k.imag()) > 1e-10 * std::max(1.0, std::abs(k.real())))
        throw IntegrityError("intensity has imaginary part " + sci(k.imag()) + " at t = " +
                             std::to_string(state.t));
    if (k.real() < -1e-9)
        throw IntegrityError("negative intensity " + sci(k.real()) + " at t = " +
                             std::to_string(state.t) + "; the hierarchy truncation (n_cut = " +
                             std::to_string(model.n_cut) + ") or the time step is too coarse");
    return std::max(0.0, k.real());
}

namespace {

HierarchyState normalized(const HierarchyModel& model, const HierarchyState& state, Operator lin,
                          double dt) {
    HierarchyState out = with_matrix(state, std::move(lin));
    const double tr = out.block(model.n, model.n).trace().real();
    if (!(tr > 0.0))
        throw IntegrityError("no-count step lost all weight (k dt >= 1) at t = " +
                             std::to_string(state.t));
    out.R /= tr;
    out.t = state.t + dt;
    return out;
}

}  // namespace

HierarchyState drift_step(const HierarchyModel& model, const HierarchyState& state, cplx xi,
                          double dt) {
    require_state(model, state);
    return normalized(model, state, state.R + dt * apply_map(Map::no_count, model, state.R, xi), dt);
}

HierarchyState drift_step_rk4(const HierarchyModel& model, const HierarchyState& state,
                              const Envelope& env, double dt) {
    require_state(model, state);
    const double t = state.t, mid = t + 0.5 * dt;
    const cplx x0 = env.xi_on_piece(t, mid), xm = env.xi_on_piece(mid, mid),
               x1 = env.xi_on_piece(t + dt, mid);
    const Operator& R = state.R;
    const Operator k1 = apply_map(Map::no_count, model, R, x0);
    const Operator k2 = apply_map(Map::no_count, model, R + 0.5 * dt * k1, xm);
    const Operator k3 = apply_map(Map::no_count, model, R + 0.5 * dt * k2, xm);
    const Operator k4 = apply_map(Map::no_count, model, R + dt * k3, x1);
    return normalized(model, state, R + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), dt);
}

HierarchyState jump_step(const HierarchyModel& model, const HierarchyState& state, cplx xi) {
    const double k = intensity(model, state, xi);
    require(k > 0.0, "jump_step: intensity must be positive for a count");
    return with_matrix(state, jump_numerator(model, state.R, xi) / k);
}

HierarchyState master_step(const HierarchyModel& model, const HierarchyState& state,
                           const Envelope& env, double dt, Stepper stepper) {
    require_state(model, state);
    require(dt > 0.0, "master_step: dt must be positive");
    const double t = state.t;
    const double mid = t + 0.5 * dt;
    HierarchyState out = state;
    if (stepper == Stepper::euler) {
        out.R += dt * master_rhs(model, state.R, env.xi_on_piece(mid, mid));
    } else {
        const cplx x0 = env.xi_on_piece(t, mid);
        const cplx xm = env.xi_on_piece(mid, mid);
        const cplx x1 = env.xi_on_piece(t + dt, mid);
        const Operator k1 = master_rhs(model, state.R, x0);
        const Operator k2 = master_rhs(model, state.R + 0.5 * dt * k1, xm);
        const Operator k3 = master_rhs(model, state.R + 0.5 * dt * k2, xm);
        const Operator k4 = master_rhs(model, state.R + dt * k3, x1);
        out.R += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out.t = t + dt;
    if (!out.R.allFinite()) throw IntegrityError("master hierarchy diverged at t = " + std::to_string(t));
    return out;
}

HierarchyState evolve_master(const HierarchyModel& model, HierarchyState state,
                             const Envelope& env, double t1, double max_dt, Stepper stepper) {
    require(max_dt > 0.0, "evolve_master: max_dt must be positive");
    for (const auto& [a, b] : env.pieces(state.t, t1)) {
        const int steps = std::max(1, static_cast<int>(std::ceil((b - a) / max_dt - 1e-9)));
        const double h = (b - a) / steps;
        state.t = a;
        for (int i = 0; i < steps; ++i) {
            state = master_step(model, state, env, h, stepper);
            state.t = a + (i + 1) * h;
        }
    }
    state.t = std::max(state.t, t1);
    return state;
}

std::vector<MasterCheckpoint> master_checkpoints(const HierarchyModel& model,
                                                 const Envelope& env,
                                                 const std::vector<double>& times, double max_dt,
                                                 Stepper stepper) {
    require(std::is_sorted(times.begin(), times.end()), "checkpoint times must be ascending");
    HierarchyState state = initial_hierarchy(
        model, model.number_basis ? HierarchyKind::number_basis : HierarchyKind::unconditional,
        env.begin());
    std::vector<MasterCheckpoint> out;
    for (double t : times) {
        require(t >= env.begin(), "checkpoint time precedes the pulse start");
        if (t > state.t) state = evolve_master(model, std::move(state), env, t, max_dt, stepper);
        out.push_back({t, state});
    }
    return out;
}

DensityOperator physical_state(const HierarchyModel& model, const HierarchyState& state) {
    require_state(model, state);
    require(!model.number_basis, "physical_state needs a squeezed-basis hierarchy");
    return state.block(model.n, model.n);
}

HierarchyState convert_basis(const HierarchyState& number_state,
                             const std::map<int, CoefficientTable>& family, int n_max) {
    require(number_state.kind == HierarchyKind::number_basis, "convert_basis needs a number-basis hierarchy");
    const int m_cut = number_state.n_cut;
    const Index d = number_state.sys_dim;
    Operator A = Operator::Zero(n_max + 1, m_cut + 1);
    for (int np = 0; np <= n_max; ++np) {
        const auto it = family.find(np);
        require(it != family.end(), "convert_basis: missing coefficient table for n = " + std::to_string(np));
        require(it->second.m_cut == m_cut,
                "convert_basis: coefficient m_cut must equal the number-basis cut");
        A.row(np) = it->second.a.transpose();
    }
    const Operator big = kron(A, identity(d));
    HierarchyState out;
    out.R = big * number_state.R * big.adjoint();
    out.n_cut = n_max;
    out.sys_dim = d;
    out.kind = HierarchyKind::unconditional;
    out.t = number_state.t;
    return out;
}

DensityOperator convert_physical(const HierarchyState& number_state, const CoefficientTable& table) {
    require(number_state.kind == HierarchyKind::number_basis,
            "convert_physical needs a number-basis hierarchy");
    require(table.m_cut == number_state.n_cut,
            "convert_physical: coefficient m_cut must equal the number-basis cut");
    const Index d = number_state.sys_dim;
    DensityOperator sigma = DensityOperator::Zero(d, d);
    for (int a = 0; a <= table.m_cut; ++a) {
        if (table.a(a) == cplx(0.0)) continue;
        for (int b = 0; b <= table.m_cut; ++b) {
            if (table.a(b) == cplx(0.0)) continue;
            sigma += table.a(a) * std::conj(table.a(b)) * number_state.block(a, b);
        }
    }
    return sigma;
}

double boundary_stress(const HierarchyModel& model, const HierarchyState& state, cplx xi) {
    require_state(model, state);
    if (model.number_basis) return 0.0;
    double worst = 0.0;
    for (int b = 0; b <= model.n_cut; ++b)
        worst = std::max(worst, state.block(model.n_cut, b).norm());
    return std::sqrt(model.n_cut + 1.0) * model.squeeze.s() * std::abs(xi) * worst;
}

double truncation_stress(const HierarchyModel& model, const Envelope& env, double t_end,
                         double max_dt, int samples) {
    require(!model.number_basis, "truncation_stress applies to the squeezed basis");
    require(samples >= 1 && t_end > env.begin(), "truncation_stress: empty time range");
    HierarchyModel wider = model;
    wider.n_cut += 2;
    std::vector<double> times;
    for (int i = 1; i <= samples; ++i)
        times.push_back(env.begin() + (t_end - env.begin()) * i / samples);
    const auto a = master_checkpoints(model, env, times, max_dt, Stepper::rk4);
    const auto b = master_checkpoints(wider, env, times, max_dt, Stepper::rk4);
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
        worst = std::max(worst, trace_distance(physical_state(model, a[i].state),
                                               physical_state(wider, b[i].state)));
    return worst;
}

double check_truncation(const HierarchyModel& model, const Envelope& env, double t_end,
                        double max_dt, double alarm) {
    const double stress = truncation_stress(model, env, t_end, max_dt);
    if (alarm >= 0.0 && stress > alarm)
        throw IntegrityError("truncation stress " + sci(stress) + " exceeds " + sci(alarm) +
                             " with n_cut = " + std::to_string(model.n_cut));
    return stress;
}

HierarchyModel calibrate_n_cut(const HierarchyModel& model, const Envelope& env, double t_end,
                               double max_dt, double alarm, int max_cut) {
    require(alarm > 0.0, "truncation alarm must be positive");
    HierarchyModel trial = model;
    double stress = 0.0;
    for (; trial.n_cut <= max_cut; trial.n_cut += 2) {
        stress = truncation_stress(trial, env, t_end, max_dt);
        if (stress <= alarm) return trial;
    }
    throw IntegrityError("no n_cut up to " + std::to_string(max_cut) + " brings the truncation stress below " +
                         sci(alarm) + " (last " + sci(stress) + ")");
}

namespace {

int step_count(double t0, double t_end, double dt) {
    require(dt > 0.0 && t_end > t0, "sme: need dt > 0 and t_end > start");
    const double x = (t_end - t0) / dt;
    const double steps = std::round(x);
    require(std::abs(x - steps) < 1e-9 * std::max(1.0, x), "sme: (t_end - t0) must be a multiple of dt");
    return static_cast<int>(steps);
}

std::vector<int> grid_indices(double t0, double dt, int steps, const std::vector<double>& times) {
    std::vector<int> out;
    for (double t : times) {
        const double x = (t - t0) / dt;
        const double j = std::round(x);
        require(std::abs(x - j) < 1e-9 * std::max(1.0, x) && j >= 0 && j <= steps,
                "checkpoint time " + std::to_string(t) + " is not on the dt grid");
        out.push_back(static_cast<int>(j));
    }
    return out;
}

// Shared driver; `decide` returns the number of counts to apply at step i.
template <class Decide>
SmeTrajectory run_filter(const HierarchyModel& model, const Envelope& env, double t_end,
                         const SmeOptions& options, const std::vector<double>& checkpoints,
                         Decide&& decide) {
    require(!model.number_basis, "the filter runs in the squeezed basis");
    const double t0 = env.begin();
    const double dt = options.dt;
    const int steps = step_count(t0, t_end, dt);
    const std::vector<int> marks = grid_indices(t0, dt, steps, checkpoints);
    SmeTrajectory out;
    HierarchyState state = initial_hierarchy(model, HierarchyKind::conditional, t0);
    auto record = [&](int i) {
        for (std::size_t k = 0; k < marks.size(); ++k)
            if (marks[k] == i) out.checkpoints.push_back({checkpoints[k], state});
    };
    record(0);
    out.diagnostics.min_intensity = INFINITY;
    for (int i = 0; i < steps; ++i) {
        const double t = t0 + i * dt;
        const cplx xi = env.xi(t + 0.5 * dt);
        state.t = t;
        const double k = intensity(model, state, xi);
        const double kdt = k * dt;
        out.diagnostics.min_intensity = std::min(out.diagnostics.min_intensity, k);
        out.diagnostics.max_kdt = std::max(out.diagnostics.max_kdt, kdt);
        out.diagnostics.max_boundary_stress =
            std::max(out.diagnostics.max_boundary_stress, boundary_stress(model, state, xi));
        if (kdt > options.fail_kdt)
            throw IntegrityError("k dt = " + sci(kdt) + " exceeds " + sci(options.fail_kdt) +
                                 " at t = " + std::to_string(t) + "; reduce dt");
        if (kdt > options.warn_kdt) ++out.diagnostics.coarse_steps;
        const int counts = decide(i, kdt);
        if (counts == 0) {
            state = options.drift == DriftScheme::euler ? drift_step(model, state, xi, dt)
                                                        : drift_step_rk4(model, state, env, dt);
        } else {
            for (int c = 0; c < counts; ++c) state = jump_step(model, state, xi);
            for (int c = 0; c < counts; ++c) out.count_times.push_back(t + dt);
        }
        state.t = t + dt;
        record(i + 1);
    }
    return out;
}

}  // namespace

SmeTrajectory run_sme_trajectory(const HierarchyModel& model, const Envelope& env, double t_end,
                                 const SmeOptions& options, std::uint64_t seed,
                                 const std::vector<double>& checkpoints) {
    Rng rng(seed);
    SmeTrajectory out = run_filter(model, env, t_end, options, checkpoints,
                                   [&](int, double kdt) { return rng.uniform() < kdt ? 1 : 0; });
    out.seed = seed;
    return out;
}

SmeTrajectory run_sme_record(const HierarchyModel& model, const Envelope& env, double t_end,
                             const SmeOptions& options, const std::vector<double>& count_times,
                             const std::vector<double>& checkpoints) {
    const double t0 = env.begin();
    const int steps = step_count(t0, t_end, options.dt);
    std::vector<int> counts(steps, 0);
    for (double t : count_times) {
        const int i = static_cast<int>(std::ceil((t - t0) / options.dt - 1e-9)) - 1;
        require(i >= 0 && i < steps, "count time outside the integration window");
        ++counts[i];
    }
    return run_filter(model, env, t_end, options, checkpoints,
                      [&](int i, double) { return counts[i]; });
}

}  // namespace sqz
