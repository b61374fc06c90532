#pragma once

#include <functional>
#include <vector>

#include "sqz/hilbert.hpp"

namespace sqz {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussLegendreRule gauss_legendre(int order);

/// Nodes/weights of `rule` mapped onto [a, b], optionally split into equal panels.
struct MappedRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
MappedRule map_rule(const GaussLegendreRule& rule, double a, double b, int panels = 1);

/// Adaptive Gauss-Kronrod (15-point) on [a, b] for a complex integrand.
cplx integrate_adaptive(const std::function<cplx(double)>& f, double a, double b,
                        double tol = 1e-12);
double integrate_adaptive_real(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12);

}  // namespace sqz
