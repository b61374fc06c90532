#include "sqz/squeezed_state.hpp"

#include <algorithm>
#include <cmath>

#include "sqz/errors.hpp"

namespace sqz {

double SqueezeParams::c() const { return std::cosh(r); }
double SqueezeParams::s() const { return std::sinh(r); }
cplx SqueezeParams::gamma() const { return 0.5 * r * std::exp(-2.0 * kI * phi); }
cplx SqueezeParams::phase() const { return std::exp(2.0 * kI * phi); }

namespace {

void validate(int n, const SqueezeParams& params) {
    require(n >= 0, "photon number n must be non-negative");
    require(std::isfinite(params.r) && params.r >= 0.0, "squeeze magnitude r must be >= 0");
    require(std::isfinite(params.phi), "squeeze phase phi must be finite");
}

int padding_for(int m_cut) { return std::max(40, m_cut / 2); }

// Columns n of exp(gamma b^2 - gamma* b^dagger^2) on a padded space, kept up to m_cut.
Operator squeeze_columns(const SqueezeParams& params, int m_cut, int n_max) {
    const Index dim = m_cut + 1 + padding_for(m_cut);
    const Operator b = make_annihilation(dim);
    const Operator b2 = b * b;
    const cplx g = params.gamma();
    const Operator generator = g * b2 - std::conj(g) * b2.adjoint();
    const Operator full = matrix_exponential(generator, 1.0);
    return full.block(0, 0, m_cut + 1, n_max + 1);
}

CoefficientTable make_table(int n, const SqueezeParams& params, int m_cut, const StateVector& a) {
    CoefficientTable t;
    t.n = n;
    t.params = params;
    t.m_cut = m_cut;
    t.a = a;
    t.deficit = 1.0 - a.squaredNorm();
    return t;
}

int initial_cut(int n, int m_cut_start) {
    return m_cut_start > 0 ? m_cut_start : std::max(n + 20, 24);
}

}  // namespace

CoefficientTable squeeze_coefficients_fixed(int n, const SqueezeParams& params, int m_cut) {
    validate(n, params);
    require(m_cut >= n, "m_cut must be at least n");
    require(m_cut <= kMaxCoefficientCut, "m_cut exceeds the hard cap");
    const Operator cols = squeeze_columns(params, m_cut, n);
    return make_table(n, params, m_cut, cols.col(n));
}

CoefficientTable squeeze_coefficients(int n, const SqueezeParams& params, int m_cut_start,
                                      double target) {
    return coefficient_family(n, params, std::max(initial_cut(n, m_cut_start), n), target).at(n);
}

std::map<int, CoefficientTable> coefficient_family(int n_max, const SqueezeParams& params,
                                                   int m_cut_start, double target) {
    validate(n_max, params);
    require(target > 0.0, "coefficient deficit target must be positive");
    int m_cut = std::min(std::max(initial_cut(n_max, m_cut_start), n_max), kMaxCoefficientCut);
    while (true) {
        const Operator cols = squeeze_columns(params, m_cut, n_max);
        std::map<int, CoefficientTable> family;
        double worst = 0.0;
        for (int k = 0; k <= n_max; ++k) {
            family.emplace(k, make_table(k, params, m_cut, cols.col(k)));
            worst = std::max(worst, family.at(k).deficit);
        }
        if (worst < target) return family;
        if (m_cut >= kMaxCoefficientCut)
            throw IntegrityError("squeeze coefficients: deficit " + sci(worst) +
                                 " above target " + sci(target) + " at m_cut cap " +
                                 std::to_string(kMaxCoefficientCut));
        m_cut = std::min(kMaxCoefficientCut, static_cast<int>(std::ceil(1.5 * m_cut)));
    }
}

double check_recurrence(const std::map<int, CoefficientTable>& family, int n, int m_max) {
    require(n >= 0, "check_recurrence: n must be non-negative");
    const auto mid = family.find(n);
    const auto up = family.find(n + 1);
    require(mid != family.end() && up != family.end(),
            "check_recurrence: tables for n and n+1 are required");
    const CoefficientTable* down = nullptr;
    if (n > 0) {
        const auto it = family.find(n - 1);
        require(it != family.end(), "check_recurrence: table for n-1 is required");
        down = &it->second;
    }
    const int m_cut = mid->second.m_cut;
    require(up->second.m_cut == m_cut && (!down || down->m_cut == m_cut),
            "check_recurrence: tables must share m_cut");
    if (m_max < 0) m_max = m_cut - 1;
    require(m_max < m_cut, "check_recurrence: m_max must be below m_cut");

    const SqueezeParams& p = mid->second.params;
    const double c = p.c();
    const cplx se = p.s() * p.phase();
    double residual = 0.0;
    for (int m = 0; m <= m_max; ++m) {
        const cplx lhs = std::sqrt(m + 1.0) * mid->second[m + 1];
        cplx rhs = -std::sqrt(n + 1.0) * se * up->second[m];
        if (down) rhs += std::sqrt(static_cast<double>(n)) * c * (*down)[m];
        residual = std::max(residual, std::abs(lhs - rhs));
    }
    return residual;
}

FieldStatistics field_statistics_closed_form(int n, const SqueezeParams& params) {
    validate(n, params);
    const double c = params.c();
    const double s = params.s();
    return {c * c * n + s * s * (n + 1.0), (2.0 * n + 1.0) * std::exp(-2.0 * params.r),
            (2.0 * n + 1.0) * std::exp(2.0 * params.r)};
}

FieldStatistics field_statistics_from_table(const CoefficientTable& table) {
    // Two empty levels on top so b^dagger acting on the stored range is exact.
    const Index dim = table.m_cut + 3;
    StateVector psi = StateVector::Zero(dim);
    psi.head(table.m_cut + 1) = table.a;
    const Operator b = make_annihilation(dim);
    const cplx rot = std::exp(-kI * table.params.phi);
    const Operator x = rot * b + std::conj(rot) * b.adjoint();
    const Operator y = -kI * (rot * b - std::conj(rot) * b.adjoint());
    const double norm2 = psi.squaredNorm();

    auto expect = [&](const Operator& op) { return psi.dot(op * psi).real() / norm2; };
    auto variance = [&](const Operator& op) {
        const StateVector v = op * psi;
        const double mean = psi.dot(v).real() / norm2;
        return v.squaredNorm() / norm2 - mean * mean;
    };
    return {expect(make_number(dim)), variance(x), variance(y)};
}

FieldStatisticsComparison field_statistics(int n, const SqueezeParams& params, double target) {
    const CoefficientTable table = squeeze_coefficients(n, params, 0, target);
    return {field_statistics_closed_form(n, params), field_statistics_from_table(table),
            table.deficit};
}

nlohmann::json to_json(const CoefficientTable& table) {
    nlohmann::json a = nlohmann::json::array();
    for (Index m = 0; m < table.a.size(); ++m) {
        a.push_back(table.a(m).real());
        a.push_back(table.a(m).imag());
    }
    return {{"n", table.n},         {"r", table.params.r},       {"phi", table.params.phi},
            {"m_cut", table.m_cut}, {"deficit", table.deficit}, {"a", a}};
}

CoefficientTable coefficient_table_from_json(const nlohmann::json& j) {
    CoefficientTable t;
    try {
        t.n = j.at("n").get<int>();
        t.params.r = j.at("r").get<double>();
        t.params.phi = j.at("phi").get<double>();
        t.m_cut = j.at("m_cut").get<int>();
        const auto& a = j.at("a");
        require(a.is_array() && a.size() == 2 * static_cast<std::size_t>(t.m_cut + 1),
                "coefficient table: 'a' must hold 2 (m_cut + 1) numbers");
        t.a.resize(t.m_cut + 1);
        for (int m = 0; m <= t.m_cut; ++m)
            t.a(m) = cplx(a[2 * m].get<double>(), a[2 * m + 1].get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("coefficient table: ") + e.what());
    }
    t.deficit = 1.0 - t.a.squaredNorm();
    return t;
}

}  // namespace sqz
