// Fock-basis expansion of squeezed number states S(gamma)|n> of the pulse mode.
#pragma once

#include <map>
#include <optional>

#include <json.hpp>

#include "sqz/hilbert.hpp"

namespace sqz {

/// gamma = (r/2) e^{-2 i phi}; S = exp(gamma B^2 - gamma* B^dagger^2), so that
/// S^dagger B S = c B - s e^{2 i phi} B^dagger.
struct SqueezeParams {
    double r = 0.0;
    double phi = 0.0;

    double c() const;
    double s() const;
    cplx gamma() const;
    /// e^{2 i phi}
    cplx phase() const;
};

struct CoefficientTable {
    int n = 0;
    SqueezeParams params;
    int m_cut = 0;
    /// a[m] = <m| S |n>, m = 0..m_cut
    StateVector a;
    /// 1 - sum_m |a_m|^2 over the stored range.
    double deficit = 0.0;

    cplx operator[](int m) const { return (m >= 0 && m <= m_cut) ? a(m) : cplx(0.0); }
};

inline constexpr int kMaxCoefficientCut = 256;

/// Coefficients at exactly this m_cut (no escalation); the deficit is reported.
CoefficientTable squeeze_coefficients_fixed(int n, const SqueezeParams& params, int m_cut);

/// Coefficients with m_cut escalated (x1.5) from `m_cut_start` until the deficit
/// falls below `target`. Throws IntegrityError when the cap is reached first.
/// m_cut_start <= 0 picks a start from n.
CoefficientTable squeeze_coefficients(int n, const SqueezeParams& params, int m_cut_start = 0,
                                      double target = 1e-8);

/// Tables for n' = 0..n_max sharing one m_cut, large enough for every member.
std::map<int, CoefficientTable> coefficient_family(int n_max, const SqueezeParams& params,
                                                   int m_cut_start = 0, double target = 1e-8);

/// max_{m <= m_max} | sqrt(m+1) a_{m+1}(n) - sqrt(n) c a_m(n-1) + sqrt(n+1) s e^{2i phi} a_m(n+1) |
/// Requires the n+1 (and, for n > 0, n-1) tables at a common m_cut.
/// m_max < 0 means m_cut - 1.
double check_recurrence(const std::map<int, CoefficientTable>& family, int n, int m_max = -1);

struct FieldStatistics {
    double mean_photons = 0.0;
    double var_x = 0.0;
    double var_y = 0.0;
};

struct FieldStatisticsComparison {
    FieldStatistics closed_form;
    FieldStatistics from_table;
    double table_deficit = 0.0;
};

/// Closed forms c^2 n + s^2 (n+1) and (2n+1) e^{-+2r} next to the same quantities
/// computed from a coefficient table. Quadratures are X = B e^{-i phi} + B^dagger e^{i phi}
/// and Y = -i (B e^{-i phi} - B^dagger e^{i phi}).
FieldStatisticsComparison field_statistics(int n, const SqueezeParams& params,
                                           double target = 1e-12);
FieldStatistics field_statistics_closed_form(int n, const SqueezeParams& params);
FieldStatistics field_statistics_from_table(const CoefficientTable& table);

nlohmann::json to_json(const CoefficientTable& table);
CoefficientTable coefficient_table_from_json(const nlohmann::json& j);

}  // namespace sqz
