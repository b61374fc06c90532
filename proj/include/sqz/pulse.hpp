// Wave-packet profiles, their discretization on a time grid, and the
// continuous-time envelope view used by the ODE-based routes.
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sqz/hilbert.hpp"

namespace sqz {

/// A profile by name plus parameters, as it appears in run configs.
struct ProfileSpec {
    std::string name;
    std::map<std::string, double> params;
};

using ProfileFn = std::function<cplx(double)>;

/// Named profile constructors. Each builder receives the parameter map and the
/// support [t0, t1] and returns a function with unit L2 norm on its natural
/// domain. The Gaussian lives on the whole real line (so part of its mass can
/// fall outside the grid); the others are supported on [t0, t1].
///
/// Built-in names:
///   flat          -- constant on [t0, t1]
///   gaussian      -- params: center (default midpoint), sigma (std of |xi|^2,
///                    default (t1-t0)/20)
///   decaying_exp  -- params: rate; xi ~ exp(-rate (s - t0) / 2)
///   rising_exp    -- params: rate; xi ~ exp(rate s / 2), the optimal cavity
///                    loading profile when rate equals the cavity coupling
class ProfileRegistry {
public:
    using Builder =
        std::function<ProfileFn(const std::map<std::string, double>&, double t0, double t1)>;

    static ProfileRegistry& instance();

    void add(const std::string& name, Builder builder);
    bool contains(const std::string& name) const;
    std::vector<std::string> names() const;
    ProfileFn make(const ProfileSpec& spec, double t0, double t1) const;

private:
    ProfileRegistry();
    std::map<std::string, Builder> builders_;
};

ProfileFn make_profile(const ProfileSpec& spec, double t0, double t1);

/// Discretized profile over M bins of width tau starting at t0.
struct PulseGrid {
    double t0 = 0.0;
    double tau = 0.0;
    int M = 0;
    std::vector<cplx> xi;
    /// tail[j] = sum_{k >= j} tau |xi_k|^2, length M + 1, tail[M] = 0.
    std::vector<double> tail;
    /// Factor applied to the midpoint samples to make the discrete norm 1.
    double renormalization = 1.0;
    /// L2 mass of the raw profile outside [t0, t0 + M tau] (diagnostic).
    double outside_mass = 0.0;

    double t_end() const { return t0 + tau * M; }
    double time(int j) const { return t0 + tau * j; }
};

/// Midpoint sampling xi_k = f(t0 + (k + 1/2) tau) followed by exact discrete
/// renormalization. Throws ValidationError for a zero-norm profile.
PulseGrid discretize(const ProfileSpec& spec, double t0, double t_end, int M);
PulseGrid discretize(const ProfileFn& profile, double t0, double t_end, int M,
                     double natural_norm = 1.0);

/// u_j = sum_{k >= j} tau |xi_k|^2
double tail_norm(const PulseGrid& grid, int j);

/// Continuous-time view of a profile: xi(t), the remaining norm u(t), and the
/// points where xi may be discontinuous. Either piecewise constant over the
/// bins of a PulseGrid, or a smooth profile on [t0, t1] renormalized there.
class Envelope {
public:
    static Envelope from_grid(const PulseGrid& grid);
    static Envelope from_profile(const ProfileFn& profile, double t0, double t1);
    static Envelope from_spec(const ProfileSpec& spec, double t0, double t1);
    static Envelope zero(double t0, double t1);

    double begin() const { return t0_; }
    double end() const { return t1_; }

    /// Right-continuous value; zero outside the support.
    cplx xi(double t) const;
    /// Value of xi at t taken from the smooth piece that contains `piece_mid`.
    /// Integrators use this so stage evaluations on piece boundaries see the
    /// correct one-sided limit.
    cplx xi_on_piece(double t, double piece_mid) const;
    /// u(t) = integral of |xi|^2 from t to the end of the support.
    double tail(double t) const;
    /// Breakpoints strictly inside (a, b), ascending.
    std::vector<double> breakpoints_in(double a, double b) const;
    /// [a, b] split at breakpoints.
    std::vector<std::pair<double, double>> pieces(double a, double b) const;

    bool piecewise_constant() const { return !grid_xi_.empty(); }

private:
    double t0_ = 0.0;
    double t1_ = 0.0;
    // grid mode
    double tau_ = 0.0;
    std::vector<cplx> grid_xi_;
    std::vector<double> grid_tail_;
    // smooth mode
    ProfileFn profile_;
    double scale_ = 1.0;
};

}  // namespace sqz
