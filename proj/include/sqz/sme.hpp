// Continuous-time hierarchies for a system driven by a squeezed number-state
// pulse: the photon-counting filter (conditional), the master equations
// (unconditional) in the squeezed basis, and the number-basis master equations.
//
// A hierarchy {rho^{a,b}}, 0 <= a, b <= n_cut, is stored as one block matrix R
// of size (n_cut+1) d with block (a, b) = rho^{a,b}. The index-shift couplings
// then become left/right multiplication by a tridiagonal matrix S acting on
// block rows/columns:
//   squeezed basis:  (S R)^{a,b} = sqrt(a) c R^{a-1,b} - sqrt(a+1) s e^{2i phi} R^{a+1,b}
//   number basis:    (S R)^{a,b} = sqrt(a) R^{a-1,b}
#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "sqz/ensemble.hpp"
#include "sqz/hilbert.hpp"
#include "sqz/pulse.hpp"
#include "sqz/squeezed_state.hpp"
#include "sqz/system.hpp"

namespace sqz {

enum class HierarchyKind { conditional, unconditional, number_basis };

struct HierarchyModel {
    OpenSystem system;
    SqueezeParams squeeze;
    /// Photon number of the input; the physical block is (n, n). Unused for number basis.
    int n = 0;
    int n_cut = 0;
    bool number_basis = false;

    Index sys_dim() const { return system.dim(); }
    Index size() const { return (n_cut + 1) * sys_dim(); }
    /// Tridiagonal coupling matrix S, (n_cut+1) x (n_cut+1).
    Operator coupling() const;
    void validate() const;
};

/// Squeezed-basis hierarchy; n_cut < 0 selects the default n + 10.
HierarchyModel squeezed_hierarchy(const OpenSystem& system, int n, const SqueezeParams& squeeze,
                                  int n_cut = -1);
/// Number-basis hierarchy for Fock inputs 0..m_cut.
HierarchyModel number_hierarchy(const OpenSystem& system, int m_cut);

struct HierarchyState {
    Operator R;
    int n_cut = 0;
    Index sys_dim = 0;
    HierarchyKind kind = HierarchyKind::unconditional;
    double t = 0.0;

    auto block(int a, int b) { return R.block(a * sys_dim, b * sys_dim, sys_dim, sys_dim); }
    auto block(int a, int b) const {
        return R.block(a * sys_dim, b * sys_dim, sys_dim, sys_dim);
    }
    /// max_{a,b} |rho^{a,b} - (rho^{b,a})^dagger|
    double symmetry_defect() const;
};

/// rho^{a,b} = delta_{ab} |psi0><psi0|
HierarchyState initial_hierarchy(const HierarchyModel& model, HierarchyKind kind, double t0);

/// -i[H, rho] - (1/2){L^dagger L, rho} + L rho L^dagger
Operator lindblad(const Operator& H, const Operator& L, const Operator& rho);

/// Right-hand side of the master hierarchy at pulse amplitude xi.
Operator master_rhs(const HierarchyModel& model, const Operator& R, cplx xi);

/// Unnormalized jump map C R C^dagger with C = 1 (x) L + xi S (x) 1.
Operator jump_numerator(const HierarchyModel& model, const Operator& R, cplx xi);

/// Counting intensity k = Tr (C R C^dagger)^{n,n}. Throws IntegrityError when the
/// imaginary residual exceeds 1e-10 (relative) or k < -1e-9.
double intensity(const HierarchyModel& model, const HierarchyState& state, cplx xi);

/// No-count step of the normalized filter: the linear no-count update divided by
/// its physical trace 1 - k dt.
HierarchyState drift_step(const HierarchyModel& model, const HierarchyState& state, cplx xi,
                          double dt);
/// No-count step from state.t with the linear no-count generator integrated by
/// classical RK4 (pulse sampled on the piece holding the step), then normalized.
HierarchyState drift_step_rk4(const HierarchyModel& model, const HierarchyState& state,
                              const Envelope& env, double dt);
/// Count step: C R C^dagger / k. Throws ValidationError when k <= 0.
HierarchyState jump_step(const HierarchyModel& model, const HierarchyState& state, cplx xi);

enum class Stepper { euler, rk4 };

/// One master step of length dt from state.t. Euler samples xi at the step
/// midpoint; RK4 samples it at its stages on the piece containing the step.
HierarchyState master_step(const HierarchyModel& model, const HierarchyState& state,
                           const Envelope& env, double dt, Stepper stepper);
/// Integrates to t1 with steps of at most max_dt, splitting at envelope breakpoints.
HierarchyState evolve_master(const HierarchyModel& model, HierarchyState state,
                             const Envelope& env, double t1, double max_dt, Stepper stepper);

struct MasterCheckpoint {
    double t = 0.0;
    HierarchyState state;
};
/// Unconditional evolution from the envelope start, recorded at ascending times.
std::vector<MasterCheckpoint> master_checkpoints(const HierarchyModel& model,
                                                 const Envelope& env,
                                                 const std::vector<double>& times, double max_dt,
                                                 Stepper stepper);

/// The physical a-priori state sigma^{n,n} (squeezed basis).
DensityOperator physical_state(const HierarchyModel& model, const HierarchyState& state);

/// sigma^{n',n''} = sum a_{m'}(n') a*_{m''}(n'') rho^{m',m''} for n', n'' <= n_max.
/// All tables must share m_cut == number-basis cut.
HierarchyState convert_basis(const HierarchyState& number_state,
                             const std::map<int, CoefficientTable>& family, int n_max);
/// Only the (n, n) block of the conversion.
DensityOperator convert_physical(const HierarchyState& number_state, const CoefficientTable& table);

/// sqrt(n_cut + 1) s |xi| max_b ||R^{n_cut, b}||_F: size of the coupling the
/// truncation drops at this instant.
double boundary_stress(const HierarchyModel& model, const HierarchyState& state, cplx xi);

/// Truncation stress of the squeezed-basis hierarchy: the largest trace distance
/// between the physical a-priori states computed with n_cut and with n_cut + 2,
/// over `samples` equally spaced times on [env.begin(), t_end] (RK4, max_dt).
double truncation_stress(const HierarchyModel& model, const Envelope& env, double t_end,
                         double max_dt, int samples = 8);

/// Integrator for the no-count evolution between grid points. Euler overshoots
/// the zeros of k_t (dark points) by O(dt), which trips the negative-intensity
/// alarm; RK4 keeps that error far below it. Jumps are placed identically.
enum class DriftScheme { euler, rk4 };

struct SmeOptions {
    double dt = 0.01;
    /// Warn when k dt exceeds this; fail above fail_kdt.
    double warn_kdt = 0.1;
    double fail_kdt = 0.5;
    DriftScheme drift = DriftScheme::rk4;
};

struct SmeDiagnostics {
    double max_kdt = 0.0;
    int coarse_steps = 0;
    double min_intensity = 0.0;
    double max_boundary_stress = 0.0;
};

struct SmeTrajectory {
    std::uint64_t seed = 0;
    std::vector<double> count_times;
    std::vector<MasterCheckpoint> checkpoints;
    SmeDiagnostics diagnostics;
};

/// Sampled filter trajectory on the uniform dt grid from env.begin() to t_end.
/// A jump is drawn with probability k dt from the start-of-step state and applied
/// at the step end. Pure function of (model, env, options, seed).
SmeTrajectory run_sme_trajectory(const HierarchyModel& model, const Envelope& env, double t_end,
                                 const SmeOptions& options, std::uint64_t seed,
                                 const std::vector<double>& checkpoints);

/// Filter driven by a prescribed record: a count at time t jumps at the end of the
/// step (t_i, t_{i+1}] containing it.
SmeTrajectory run_sme_record(const HierarchyModel& model, const Envelope& env, double t_end,
                             const SmeOptions& options, const std::vector<double>& count_times,
                             const std::vector<double>& checkpoints);

/// Returns the truncation stress; throws IntegrityError when it exceeds `alarm`.
double check_truncation(const HierarchyModel& model, const Envelope& env, double t_end,
                        double max_dt, double alarm);

/// Smallest n_cut >= model.n_cut (in steps of 2) whose truncation stress is below
/// `alarm`; throws IntegrityError past `max_cut`.
HierarchyModel calibrate_n_cut(const HierarchyModel& model, const Envelope& env, double t_end,
                               double max_dt, double alarm, int max_cut = 80);

}  // namespace sqz
