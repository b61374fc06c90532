#include "sqz/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sqz/ensemble.hpp"
#include "sqz/errors.hpp"
#include "sqz/quadrature.hpp"
#include "sqz/system.hpp"
#include "sqz/trajectories.hpp"

namespace sqz {

double CavityModel::mean_photons() const {
    const double c = params.c(), s = params.s();
    return c * c * n + s * s * (n + 1);
}

void CavityModel::validate() const {
    require(std::isfinite(Delta), "cavity: Delta must be finite");
    require(Gamma > 0.0 && std::isfinite(Gamma), "cavity: Gamma must be positive");
    require(n >= 0, "cavity: n must be non-negative");
    require(dim >= std::ceil(mean_photons()) + 2,
            "cavity: dim must exceed the mean photon number by at least 2");
}

cplx transfer_overlap(const CavityModel& model, const Envelope& env, double t) {
    model.validate();
    const double a = env.begin();
    const double b = std::min(t, env.end());
    cplx total = 0.0;
    for (const auto& [lo, hi] : env.pieces(a, b)) {
        const double mid = 0.5 * (lo + hi);
        total += integrate_adaptive(
            [&](double s) {
                return env.xi_on_piece(s, mid) * std::exp(cplx(0.5 * model.Gamma * (s - t), model.Delta * s));
            },
            lo, hi, 1e-10);
    }
    return total;
}

double p_transfer_fock(const CavityModel& model, const Envelope& env, double t) {
    const double eff = model.Gamma * std::norm(transfer_overlap(model, env, t));
    return std::pow(eff, model.n);
}

double p_transfer_fock_max(int n, double Gamma, double t0, double t) {
    require(t > t0, "transfer: t must exceed t0");
    return std::pow(-std::expm1(-Gamma * (t - t0)), n);
}

ProfileSpec optimal_profile(double Gamma) {
    require(Gamma > 0.0, "optimal_profile: Gamma must be positive");
    return ProfileSpec{"rising_exp", {{"rate", Gamma}}};
}

Envelope optimal_envelope(double Gamma, double t0, double t) {
    require(t > t0, "optimal_profile: t must exceed t0");
    return Envelope::from_spec(optimal_profile(Gamma), t0, t);
}

double p_transfer_squeezed(const CavityModel& model, const CoefficientTable& coeffs,
                           const Envelope& env, double t) {
    const double eff = model.Gamma * std::norm(transfer_overlap(model, env, t));
    double total = 0.0;
    double power = 1.0;
    for (int k = 0; k <= coeffs.m_cut; ++k, power *= eff) total += std::norm(coeffs.a(k)) * power;
    return total;
}

double p_transfer_squeezed_max(const CoefficientTable& coeffs, double Gamma, double t0, double t) {
    const double eff = p_transfer_fock_max(1, Gamma, t0, t);
    double total = 0.0;
    double power = 1.0;
    for (int k = 0; k <= coeffs.m_cut; ++k, power *= eff) total += std::norm(coeffs.a(k)) * power;
    return total;
}

double p_transfer_trajectory(const CavityModel& model, const CoefficientTable& coeffs,
                             const Envelope& env, double t, double max_dt) {
    model.validate();
    require(model.dim > coeffs.m_cut, "transfer: cavity dim must exceed the coefficient cut");
    TrajectoryModel traj;
    traj.system = cavity(model.dim, model.Gamma, model.Delta, 0);
    traj.env = env;
    traj.coeffs = coeffs;
    traj.max_dt = max_dt;
    return no_count_vectors(traj, t).psi.col(0).squaredNorm();
}

std::vector<ScanRow> transfer_scan(const CavityModel& model, const CoefficientTable& coeffs,
                                   const ScanSpec& spec, int threads) {
    model.validate();
    require(!spec.deltas.empty(), "transfer scan: no detunings");
    require(spec.t > spec.t0, "transfer scan: t must exceed t0");
    std::vector<std::map<std::string, double>> profiles = spec.profile_params;
    const bool optimal = profiles.empty();
    if (optimal) profiles.push_back({{"rate", model.Gamma}});
    const ProfileSpec base{optimal ? "rising_exp" : spec.profile, {}};

    std::vector<ScanRow> rows(spec.deltas.size() * profiles.size());
    const double p_max = p_transfer_squeezed_max(coeffs, model.Gamma, spec.t0, spec.t);
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        const std::size_t di = i / profiles.size();
        const std::size_t pi = i % profiles.size();
        CavityModel m = model;
        m.Delta = spec.deltas[di];
        ProfileSpec profile = base;
        profile.params = profiles[pi];
        const Envelope env = Envelope::from_spec(profile, spec.t0, spec.t);
        ScanRow& row = rows[i];
        row.delta = m.Delta;
        row.params = profiles[pi];
        row.t = spec.t;
        row.P = p_transfer_squeezed(m, coeffs, env, spec.t);
        row.P_max = p_max;
        row.gap = p_max - row.P;
    });
    return rows;
}

std::size_t scan_argmax(const std::vector<ScanRow>& rows) {
    require(!rows.empty(), "transfer scan: empty table");
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].P > rows[best].P) best = i;
    return best;
}

void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows) {
    out << "delta";
    if (!rows.empty())
        for (const auto& [name, value] : rows.front().params) out << ',' << name;
    out << ",t,P,P_max,gap\n";
    char buf[64];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << buf;
    };
    for (const ScanRow& row : rows) {
        put(row.delta);
        for (const auto& [name, value] : row.params) {
            out << ',';
            put(value);
        }
        for (double x : {row.t, row.P, row.P_max, row.gap}) {
            out << ',';
            put(x);
        }
        out << '\n';
    }
}

}  // namespace sqz
