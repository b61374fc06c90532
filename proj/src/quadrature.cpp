#include "sqz/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "sqz/errors.hpp"

namespace sqz {

GaussLegendreRule gauss_legendre(int order) {
    require(order >= 1 && order <= 200, "gauss_legendre: order must be in [1, 200]");
    // legendre_p_zeros returns the non-negative zeros in ascending order.
    const auto positive = boost::math::legendre_p_zeros<double>(order);
    GaussLegendreRule rule;
    for (double x : positive) {
        const double dp = boost::math::legendre_p_prime<double>(order, x);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes.push_back(x);
        rule.weights.push_back(w);
        if (x != 0.0) {
            rule.nodes.push_back(-x);
            rule.weights.push_back(w);
        }
    }
    std::vector<std::size_t> idx(rule.nodes.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return rule.nodes[a] < rule.nodes[b]; });
    GaussLegendreRule sorted;
    for (auto i : idx) {
        sorted.nodes.push_back(rule.nodes[i]);
        sorted.weights.push_back(rule.weights[i]);
    }
    return sorted;
}

MappedRule map_rule(const GaussLegendreRule& rule, double a, double b, int panels) {
    require(panels >= 1, "map_rule: panels must be positive");
    MappedRule out;
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double half = 0.5 * width;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            out.nodes.push_back(lo + half * (rule.nodes[i] + 1.0));
            out.weights.push_back(half * rule.weights[i]);
        }
    }
    return out;
}

double integrate_adaptive_real(const std::function<double(double)>& f, double a, double b,
                               double tol) {
    if (b <= a) return 0.0;
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 15, tol, &err);
}

cplx integrate_adaptive(const std::function<cplx(double)>& f, double a, double b, double tol) {
    const double re = integrate_adaptive_real([&](double t) { return f(t).real(); }, a, b, tol);
    const double im = integrate_adaptive_real([&](double t) { return f(t).imag(); }, a, b, tol);
    return {re, im};
}

}  // namespace sqz
