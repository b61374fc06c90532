// Continuous-time conditional vectors for prescribed count records.
//
// Between counts the family psi(m), m = 0..m_cut, obeys
//   d psi(m)/dt = -i G psi(m) - xi_t sqrt(m+1) L^dagger psi(m+1),   G = H - (i/2) L^dagger L,
// and a count at t maps psi(m) -> L psi(m) + xi_t sqrt(m+1) psi(m+1). The exclusive
// density of a record at time t is sum_m ||psi(m)||^2 u_t^m with u_t the pulse
// norm still to arrive. Count distributions and the a-priori state integrate
// these densities over ordered count times with nested Gauss-Legendre rules.
#pragma once

#include <map>
#include <vector>

#include "sqz/hilbert.hpp"
#include "sqz/pulse.hpp"
#include "sqz/squeezed_state.hpp"
#include "sqz/system.hpp"

namespace sqz {

/// T_t = exp(-i G t), cached at multiples of a fixed step.
class Propagators {
public:
    Propagators(const OpenSystem& system, double step);

    const Operator& generator() const { return G_; }
    double step() const { return step_; }
    /// T at k * step, built as products of the one-step propagator.
    const Operator& at(int k);
    /// T_t for arbitrary t >= 0 (direct exponential).
    Operator of(double t) const;

private:
    Operator G_;
    double step_;
    std::vector<Operator> cache_;
};

struct TrajectoryModel {
    OpenSystem system;
    Envelope env;
    CoefficientTable coeffs;
    /// Largest RK4 step of the family ODE.
    double max_dt = 0.005;
    /// Gauss-Legendre points per dimension for records of <= 2 counts and for more.
    int order_low = 32;
    int order_high = 16;
    /// Workers over the outermost quadrature nodes; results do not depend on it.
    int threads = 1;

    double t0() const { return env.begin(); }
    int order_for(int s) const { return s <= 2 ? order_low : order_high; }
    void validate() const;
};

struct ContinuousFamily {
    /// Column m holds |psi(m)>.
    Operator psi;
    double t = 0.0;
};

/// psi(m) = a_m |psi0> at the envelope start.
ContinuousFamily initial_family(const TrajectoryModel& model);

/// No-count evolution of `family` to t1 >= family.t (RK4, split at envelope breakpoints).
ContinuousFamily propagate(const TrajectoryModel& model, ContinuousFamily family, double t1);

/// The no-count family at t.
ContinuousFamily no_count_vectors(const TrajectoryModel& model, double t);

/// Count at family.t: psi(m) <- L psi(m) + xi sqrt(m+1) psi(m+1). When family.t sits
/// on an envelope breakpoint, xi is the right-continuous value.
ContinuousFamily apply_count(const TrajectoryModel& model, const ContinuousFamily& family);

/// sum_m ||psi(m)||^2 u^m with u the envelope tail at family.t.
double family_density(const TrajectoryModel& model, const ContinuousFamily& family);
/// sum_m u^m |psi(m)><psi(m)|, unnormalized.
DensityOperator family_state(const TrajectoryModel& model, const ContinuousFamily& family);

/// Family at t conditioned on counts at `times` (ascending, within [t0, t]).
ContinuousFamily record_family(const TrajectoryModel& model, const std::vector<double>& times,
                               double t);

/// Exclusive density of counts exactly at `times` and none elsewhere in [t0, t].
/// With no times this is the no-count probability. Throws ValidationError for
/// unordered times or times outside [t0, t].
double exclusive_density(const TrajectoryModel& model, const std::vector<double>& times, double t);

struct CountDistribution {
    double t = 0.0;
    /// P[s] for s = 0..s_max.
    std::vector<double> P;
    /// 1 - sum P: tail beyond s_max plus quadrature and truncation error.
    double deficit = 0.0;
};

struct AprioriDecomposition {
    double t = 0.0;
    /// sigma_t = sum_s sectors[s].
    DensityOperator sigma;
    /// Unnormalized contribution of records with exactly s counts.
    std::vector<DensityOperator> sectors;
    CountDistribution counts;
};

/// Probabilities of exactly s counts in [t0, t], s = 0..s_max (s_max <= 4). Each
/// count time gets order_for(s) Gauss-Legendre points on every piece of a smooth
/// envelope (the densities jump where the pulse switches on or off); grid
/// envelopes are integrated across their bins.
CountDistribution count_distribution(const TrajectoryModel& model, double t, int s_max);

/// sigma_t rebuilt from the count sectors s = 0..s_max.
AprioriDecomposition apriori_decomposition(const TrajectoryModel& model, double t, int s_max);

}  // namespace sqz
