#include "sqz/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sqz/errors.hpp"
#include "sqz/quadrature.hpp"

namespace sqz {

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

double required_param(const std::map<std::string, double>& params, const std::string& profile,
                      const std::string& key) {
    const auto it = params.find(key);
    require(it != params.end(), "profile '" + profile + "' requires parameter '" + key + "'");
    return it->second;
}

bool inside(double t, double t0, double t1) { return t >= t0 && t <= t1; }

ProfileFn build_flat(const std::map<std::string, double>&, double t0, double t1) {
    const double height = 1.0 / std::sqrt(t1 - t0);
    return [=](double t) { return inside(t, t0, t1) ? cplx(height) : cplx(0.0); };
}

ProfileFn build_gaussian(const std::map<std::string, double>& params, double t0, double t1) {
    const double center = param_or(params, "center", 0.5 * (t0 + t1));
    const double sigma = param_or(params, "sigma", (t1 - t0) / 20.0);
    require(sigma > 0.0, "profile 'gaussian': sigma must be positive");
    const double amp = std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25);
    return [=](double t) {
        const double x = t - center;
        return cplx(amp * std::exp(-x * x / (4.0 * sigma * sigma)));
    };
}

// sqrt(rate / (1 - e^{-rate L})) with the rate -> 0 limit 1/sqrt(L)
double exp_norm(double rate, double length) {
    if (std::abs(rate * length) < 1e-12) return 1.0 / std::sqrt(length);
    return std::sqrt(rate / -std::expm1(-rate * length));
}

ProfileFn build_decaying(const std::map<std::string, double>& params, double t0, double t1) {
    const double rate = required_param(params, "decaying_exp", "rate");
    require(rate > 0.0, "profile 'decaying_exp': rate must be positive");
    const double norm = exp_norm(rate, t1 - t0);
    return [=](double t) {
        return inside(t, t0, t1) ? cplx(norm * std::exp(-0.5 * rate * (t - t0))) : cplx(0.0);
    };
}

ProfileFn build_rising(const std::map<std::string, double>& params, double t0, double t1) {
    const double rate = required_param(params, "rising_exp", "rate");
    require(rate > 0.0, "profile 'rising_exp': rate must be positive");
    // Anchored at t1 so large rate * t never overflows.
    const double norm = exp_norm(rate, t1 - t0);
    return [=](double t) {
        return inside(t, t0, t1) ? cplx(norm * std::exp(0.5 * rate * (t - t1))) : cplx(0.0);
    };
}

double mass_on(const ProfileFn& f, double a, double b) {
    return integrate_adaptive_real([&](double t) { return std::norm(f(t)); }, a, b, 1e-13);
}

}  // namespace

ProfileRegistry::ProfileRegistry() {
    builders_["flat"] = build_flat;
    builders_["gaussian"] = build_gaussian;
    builders_["decaying_exp"] = build_decaying;
    builders_["rising_exp"] = build_rising;
}

ProfileRegistry& ProfileRegistry::instance() {
    static ProfileRegistry registry;
    return registry;
}

void ProfileRegistry::add(const std::string& name, Builder builder) {
    require(!name.empty(), "profile name must not be empty");
    builders_[name] = std::move(builder);
}

bool ProfileRegistry::contains(const std::string& name) const { return builders_.contains(name); }

std::vector<std::string> ProfileRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : builders_) out.push_back(name);
    return out;
}

ProfileFn ProfileRegistry::make(const ProfileSpec& spec, double t0, double t1) const {
    require(t1 > t0, "profile support must have t1 > t0");
    const auto it = builders_.find(spec.name);
    require(it != builders_.end(), "unknown profile '" + spec.name + "'");
    return it->second(spec.params, t0, t1);
}

ProfileFn make_profile(const ProfileSpec& spec, double t0, double t1) {
    return ProfileRegistry::instance().make(spec, t0, t1);
}

PulseGrid discretize(const ProfileSpec& spec, double t0, double t_end, int M) {
    return discretize(make_profile(spec, t0, t_end), t0, t_end, M, 1.0);
}

PulseGrid discretize(const ProfileFn& profile, double t0, double t_end, int M,
                     double natural_norm) {
    require(t_end > t0, "discretize: T must exceed t0");
    require(M >= 2, "discretize: M must be at least 2");
    PulseGrid grid;
    grid.t0 = t0;
    grid.M = M;
    grid.tau = (t_end - t0) / M;
    grid.xi.resize(M);
    double raw = 0.0;
    for (int k = 0; k < M; ++k) {
        grid.xi[k] = profile(t0 + (k + 0.5) * grid.tau);
        raw += grid.tau * std::norm(grid.xi[k]);
    }
    require(std::isfinite(raw) && raw > 0.0, "discretize: profile has zero norm on the grid");
    grid.renormalization = 1.0 / std::sqrt(raw);
    for (auto& x : grid.xi) x *= grid.renormalization;

    grid.tail.assign(M + 1, 0.0);
    for (int k = M - 1; k >= 0; --k) grid.tail[k] = grid.tail[k + 1] + grid.tau * std::norm(grid.xi[k]);
    // Remove rounding drift so the head is exactly the normalization.
    const double head = grid.tail[0];
    for (auto& u : grid.tail) u /= head;

    grid.outside_mass = std::max(0.0, natural_norm - mass_on(profile, t0, t_end));
    return grid;
}

double tail_norm(const PulseGrid& grid, int j) {
    require(j >= 0 && j <= grid.M, "tail_norm: bin index out of range");
    return grid.tail[j];
}

Envelope Envelope::from_grid(const PulseGrid& grid) {
    Envelope env;
    env.t0_ = grid.t0;
    env.t1_ = grid.t_end();
    env.tau_ = grid.tau;
    env.grid_xi_ = grid.xi;
    env.grid_tail_ = grid.tail;
    return env;
}

Envelope Envelope::from_profile(const ProfileFn& profile, double t0, double t1) {
    require(t1 > t0, "envelope: t1 must exceed t0");
    Envelope env;
    env.t0_ = t0;
    env.t1_ = t1;
    env.profile_ = profile;
    const double mass = mass_on(profile, t0, t1);
    require(std::isfinite(mass) && mass > 0.0, "envelope: profile has zero norm");
    env.scale_ = 1.0 / std::sqrt(mass);
    return env;
}

Envelope Envelope::from_spec(const ProfileSpec& spec, double t0, double t1) {
    return from_profile(make_profile(spec, t0, t1), t0, t1);
}

Envelope Envelope::zero(double t0, double t1) {
    require(t1 > t0, "envelope: t1 must exceed t0");
    Envelope env;
    env.t0_ = t0;
    env.t1_ = t1;
    env.scale_ = 0.0;
    env.profile_ = [](double) { return cplx(0.0); };
    return env;
}

cplx Envelope::xi(double t) const {
    if (t < t0_ || t >= t1_) return 0.0;
    return xi_on_piece(t, t);
}

cplx Envelope::xi_on_piece(double t, double piece_mid) const {
    if (piece_mid < t0_ || piece_mid >= t1_) return 0.0;
    if (piecewise_constant()) {
        const int M = static_cast<int>(grid_xi_.size());
        const int k = std::clamp(static_cast<int>(std::floor((piece_mid - t0_) / tau_)), 0, M - 1);
        return grid_xi_[k];
    }
    return scale_ * profile_(t);
}

double Envelope::tail(double t) const {
    if (t >= t1_) return 0.0;
    if (t <= t0_) return 1.0;
    if (piecewise_constant()) {
        const int M = static_cast<int>(grid_xi_.size());
        const int k = std::clamp(static_cast<int>(std::floor((t - t0_) / tau_)), 0, M - 1);
        const double bin_end = t0_ + (k + 1) * tau_;
        return grid_tail_[k + 1] + (bin_end - t) * std::norm(grid_xi_[k]);
    }
    if (scale_ == 0.0) return 0.0;
    return std::clamp(scale_ * scale_ * mass_on(profile_, t, t1_), 0.0, 1.0);
}

std::vector<double> Envelope::breakpoints_in(double a, double b) const {
    std::vector<double> out;
    if (piecewise_constant()) {
        const int M = static_cast<int>(grid_xi_.size());
        for (int k = 0; k <= M; ++k) {
            const double t = t0_ + k * tau_;
            if (t > a && t < b) out.push_back(t);
        }
        return out;
    }
    for (double t : {t0_, t1_})
        if (t > a && t < b) out.push_back(t);
    return out;
}

std::vector<std::pair<double, double>> Envelope::pieces(double a, double b) const {
    std::vector<std::pair<double, double>> out;
    if (b <= a) return out;
    double lo = a;
    for (double t : breakpoints_in(a, b)) {
        // Skip slivers produced by rounding of grid times.
        if (t - lo > 1e-13 * std::max(1.0, std::abs(t))) {
            out.emplace_back(lo, t);
            lo = t;
        }
    }
    if (b - lo > 0.0) out.emplace_back(lo, b);
    return out;
}

}  // namespace sqz
