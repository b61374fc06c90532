// Loading a cavity mode (H = Delta a^dagger a, L = sqrt(Gamma) a, initially empty)
// with the photons of a number or squeezed number pulse: closed forms, the optimal
// rising-exponential profile, and the same probabilities from the no-count family.
#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sqz/pulse.hpp"
#include "sqz/squeezed_state.hpp"

namespace sqz {

struct CavityModel {
    /// Cavity frequency minus pulse carrier.
    double Delta = 0.0;
    double Gamma = 1.0;
    /// Cavity Fock truncation (numerical route only).
    int dim = 8;
    int n = 1;
    SqueezeParams params;

    /// c^2 n + s^2 (n + 1)
    double mean_photons() const;
    /// Throws ValidationError unless Gamma > 0 and dim >= mean photons + 2.
    void validate() const;
};

/// I(t) = int_{t0}^{t} xi_s e^{i Delta s} e^{Gamma (s - t) / 2} ds, so that the
/// single-mode loading efficiency is Gamma |I|^2. Adaptive quadrature per
/// envelope piece at 1e-10 (relative).
cplx transfer_overlap(const CavityModel& model, const Envelope& env, double t);

/// Probability that all n photons of a number pulse sit in the cavity at t:
/// (Gamma |I(t)|^2)^n.
double p_transfer_fock(const CavityModel& model, const Envelope& env, double t);

/// (1 - e^{-Gamma (t - t0)})^n, reached only at Delta = 0 by the optimal profile.
double p_transfer_fock_max(int n, double Gamma, double t0, double t);

/// The profile sqrt(Gamma / (e^{Gamma t} - e^{Gamma t0})) e^{Gamma s / 2} on [t0, t].
ProfileSpec optimal_profile(double Gamma);
Envelope optimal_envelope(double Gamma, double t0, double t);

/// sum_k |a_k|^2 (Gamma |I(t)|^2)^k over the coefficient table.
double p_transfer_squeezed(const CavityModel& model, const CoefficientTable& coeffs,
                           const Envelope& env, double t);
/// sum_k |a_k|^2 (1 - e^{-Gamma (t - t0)})^k
double p_transfer_squeezed_max(const CoefficientTable& coeffs, double Gamma, double t0, double t);

/// ||psi_{t|0}(0)||^2 from the no-count family on a cavity of model.dim levels.
/// Requires dim > coeffs.m_cut so no absorbed photon is truncated.
double p_transfer_trajectory(const CavityModel& model, const CoefficientTable& coeffs,
                             const Envelope& env, double t, double max_dt = 1e-3);

struct ScanSpec {
    std::vector<double> deltas;
    std::string profile = "rising_exp";
    /// One profile per entry; an empty list means the optimal profile.
    std::vector<std::map<std::string, double>> profile_params;
    double t0 = 0.0;
    double t = 1.0;
};

struct ScanRow {
    double delta = 0.0;
    std::map<std::string, double> params;
    double t = 0.0;
    double P = 0.0;
    double P_max = 0.0;
    double gap = 0.0;
};

/// P over the (delta, profile) grid, in the order deltas x profiles. Pulses live
/// on [t0, t].
std::vector<ScanRow> transfer_scan(const CavityModel& model, const CoefficientTable& coeffs,
                                   const ScanSpec& spec, int threads = 1);

/// Index of the row with the largest P (first on ties).
std::size_t scan_argmax(const std::vector<ScanRow>& rows);

/// CSV: delta, <profile params...>, t, P, P_max, gap
void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows);

}  // namespace sqz
