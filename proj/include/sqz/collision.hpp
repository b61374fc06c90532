// Discrete repeated-interaction model: each time bin of the pulse is an
// ancilla oscillator that interacts with the system for one step and is then
// photon-counted. The conditional state is carried as the family psi(m),
// m = 0..m_cut, weighted by powers of the remaining pulse norm.
#pragma once

#include <cstdint>
#include <vector>

#include "sqz/ensemble.hpp"
#include "sqz/hilbert.hpp"
#include "sqz/pulse.hpp"
#include "sqz/squeezed_state.hpp"
#include "sqz/system.hpp"

namespace sqz {

struct CollisionModel {
    OpenSystem system;
    PulseGrid grid;
    CoefficientTable coeffs;
    int ancilla_dim = 3;

    double tau() const { return grid.tau; }
    int m_cut() const { return coeffs.m_cut; }
    void validate() const;
};

/// exp(-i tau (1 (x) H + (i / sqrt(tau)) (b^dagger (x) L - b (x) L^dagger))) on
/// ancilla (x) system, ancilla index slow.
Operator build_step_unitary(const Operator& H, const Operator& L, double tau, int ancilla_dim);
Operator build_step_unitary(const CollisionModel& model);

/// V[m][m'] = (<m| (x) 1) U (|m'> (x) 1)
class VBlocks {
public:
    VBlocks() = default;
    VBlocks(const Operator& U, int ancilla_dim, Index sys_dim);

    int ancilla_dim() const { return ancilla_dim_; }
    Index sys_dim() const { return sys_dim_; }
    const Operator& block(int m, int mp) const { return blocks_[m * ancilla_dim_ + mp]; }
    /// sum_{m m'} |m><m'| (x) V_{m m'}
    Operator reassemble() const;
    /// max over (m', m'') of | sum_m V_{m m''}^dagger V_{m m'} - delta 1 |
    double unitarity_defect() const;

private:
    int ancilla_dim_ = 0;
    Index sys_dim_ = 0;
    std::vector<Operator> blocks_;
};

VBlocks extract_v_blocks(const Operator& U, int ancilla_dim, Index sys_dim);

/// First-order blocks V00 = 1 - i tau H - (tau/2) L^dagger L, V01 = -sqrt(tau) L^dagger,
/// V10 = sqrt(tau) L, V11 = 1.
struct FirstOrderBlocks {
    Operator v00, v01, v10, v11;
};
FirstOrderBlocks first_order_blocks(const Operator& H, const Operator& L, double tau);

struct ConditionalVectors {
    /// Column m holds |psi(m)>; sys_dim x (m_cut + 1).
    Operator psi;
    /// Number of completed steps.
    int j = 0;
    /// Log of the product of normalization factors removed so far.
    double logweight = 0.0;
    /// Accumulated probability lost to the finite ancilla truncation.
    double leakage = 0.0;

    int m_cut() const { return static_cast<int>(psi.cols()) - 1; }
};

/// psi(m) = a_m |psi0>
ConditionalVectors initial_vectors(const CoefficientTable& coeffs, const StateVector& psi0);

/// sum_m ||psi(m)||^2 u^m
double family_weight(const Operator& psi, double u);

/// One exact step with outcome eta, unnormalized (logweight untouched).
ConditionalVectors step_exact(const ConditionalVectors& state, const VBlocks& blocks,
                              const PulseGrid& grid, int eta);
/// One step with the two-term first-order update, unnormalized. eta in {0, 1}.
ConditionalVectors step_truncated(const ConditionalVectors& state, const CollisionModel& model,
                                  int eta);
ConditionalVectors step_truncated(const ConditionalVectors& state, const FirstOrderBlocks& blocks,
                                  const PulseGrid& grid, int eta);

/// Divides out the current weight (at tail u_j) and adds its log to logweight.
/// Throws IntegrityError on a vanishing weight.
void renormalize(ConditionalVectors& state, const PulseGrid& grid);

struct OutcomeDistribution {
    std::vector<double> probabilities;
    /// 1 - sum of raw weights: the ancilla-truncation loss of this step.
    double leakage = 0.0;
};

/// Exact conditional outcome distribution for the next step, all eta < ancilla_dim.
OutcomeDistribution outcome_distribution(const ConditionalVectors& state, const VBlocks& blocks,
                                         const PulseGrid& grid);

struct SampledOutcome {
    int eta = 0;
    double probability = 0.0;
    /// The stepped (unnormalized) family for the chosen eta.
    ConditionalVectors next;
};

/// Draws eta from the exact conditional distribution. Throws IntegrityError when
/// the trajectory weight underflows (dead trajectory).
SampledOutcome sample_outcome(const ConditionalVectors& state, const VBlocks& blocks,
                              const PulseGrid& grid, Rng& rng);

struct ReducedState {
    DensityOperator rho;
    /// Probability of the record so far.
    double probability = 0.0;
};

/// rho = sum_m |psi(m)><psi(m)| u_j^m, returned normalized with its probability.
ReducedState reduce(const ConditionalVectors& state, const PulseGrid& grid);

struct Checkpoint {
    double t = 0.0;
    DensityOperator rho;
};

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    /// Detection times (end of the bin); a bin with eta photons appears eta times.
    std::vector<double> count_times;
    double logp = 0.0;
    double leakage = 0.0;
    std::vector<Checkpoint> checkpoints;
};

/// Step index of a checkpoint time; must lie on the grid within 1e-9 tau.
int checkpoint_step(const PulseGrid& grid, double t);

/// Sampled trajectory; a pure function of (model, seed).
TrajectoryRecord run_trajectory(const CollisionModel& model, std::uint64_t seed,
                                const std::vector<double>& checkpoints);

/// Per-bin outcomes from detection times; a time t counts in the bin (t_j, t_{j+1}] holding it.
std::vector<int> outcomes_from_counts(const PulseGrid& grid, const std::vector<double>& times);

/// Propagates a prescribed outcome sequence (length M) with exact or first-order blocks.
TrajectoryRecord run_record(const CollisionModel& model, const std::vector<int>& outcomes,
                            const std::vector<double>& checkpoints, bool first_order = false);

}  // namespace sqz
